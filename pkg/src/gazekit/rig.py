"""Avatar rigs with any number of eyes and their fixation kinematics.

Once a fixation direction and distance are chosen, each eye's rotation is
the unique torsion-free (shortest-arc) rotation taking its rest axis onto
the line from its center to the target, so all eyes converge on one point.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateAggregate, RotationLimitExceeded, TargetAtEyeCenter
from .rotation import normalize_quat, normalize_vec, quat_between, quat_rotate


@dataclass(frozen=True)
class EyeModel:
    """One eyeball: center and rest axis in the rig frame, limits in radians."""

    center: np.ndarray
    rest_forward: np.ndarray
    yaw_limit: float = np.deg2rad(45.0)
    pitch_limit: float = np.deg2rad(35.0)

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "rest_forward", normalize_vec(self.rest_forward))
        for limit in (self.yaw_limit, self.pitch_limit):
            if not (0.0 < limit <= np.pi / 2):
                raise ValueError("rotation limits must be in (0, pi/2]")


@dataclass(frozen=True)
class HeadPose:
    """Rigid transform from the rig frame to the world frame."""

    quaternion: np.ndarray = field(default_factory=lambda: np.array([1.0, 0, 0, 0]))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "quaternion", normalize_quat(self.quaternion))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=float))

    def apply(self, point):
        return quat_rotate(self.quaternion, point) + self.translation

    def rotate(self, direction):
        return quat_rotate(self.quaternion, direction)


@dataclass(frozen=True)
class AvatarRig:
    """Ordered eyes with recognition weights and a head pose.

    Weights are normalized to sum to one on construction.
    """

    eyes: tuple[EyeModel, ...]
    weights: np.ndarray = None
    head_pose: HeadPose = field(default_factory=HeadPose)

    def __post_init__(self):
        eyes = tuple(self.eyes)
        if len(eyes) < 1:
            raise ValueError("a rig needs at least one eye")
        object.__setattr__(self, "eyes", eyes)
        w = self.weights
        if w is None:
            w = np.full(len(eyes), 1.0 / len(eyes))
        w = np.asarray(w, dtype=float)
        if len(w) != len(eyes):
            raise ValueError("one weight per eye required")
        if np.any(w < 0) or w.sum() <= 0:
            raise ValueError("weights must be nonnegative with positive sum")
        object.__setattr__(self, "weights", w / w.sum())

    def __len__(self) -> int:
        return len(self.eyes)

    def eye_centers_world(self) -> np.ndarray:
        return np.array([self.head_pose.apply(e.center) for e in self.eyes])

    def rest_forwards_world(self) -> np.ndarray:
        return np.array([self.head_pose.rotate(e.rest_forward) for e in self.eyes])

    @property
    def gaze_anchor(self) -> np.ndarray:
        "Weighted centroid of eye centers; the colocation point, world frame."
        return self.weights @ self.eye_centers_world()

    @property
    def facing(self) -> np.ndarray:
        "Weighted mean rest direction of the eyes, world frame."
        return normalize_vec(self.weights @ self.rest_forwards_world())


@dataclass(frozen=True)
class FixationCommand:
    """Gaze direction v and distance d from an anchor point, world frame."""

    direction: np.ndarray
    distance: float
    anchor: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "direction", normalize_vec(self.direction))
        object.__setattr__(self, "anchor", np.asarray(self.anchor, dtype=float))
        if not self.distance > 0:
            raise ValueError("fixation distance must be positive")

    @property
    def target(self) -> np.ndarray:
        return self.anchor + self.distance * self.direction


@dataclass(frozen=True)
class EyeRotation:
    """Shortest-arc rotation from an eye's rest axis to its gaze line."""

    quaternion: np.ndarray  # world frame, [w, x, y, z]
    direction: np.ndarray   # rotated forward axis, unit, world frame
    torsion: float = 0.0    # fixed by the shortest-arc construction

    def __post_init__(self):
        object.__setattr__(self, "quaternion", normalize_quat(self.quaternion))
        object.__setattr__(self, "direction", np.asarray(self.direction, dtype=float))


@dataclass(frozen=True)
class LimitViolation:
    eye_index: int
    axis: str       # "yaw" or "pitch"
    angle: float    # unclamped angle, radians
    limit: float


def _local_frame(forward):
    """Right-handed eye frame with z along the rest axis."""
    ref = np.array([0.0, 1.0, 0.0])
    if abs(float(forward @ ref)) > 1.0 - 1e-9:
        ref = np.array([0.0, 0.0, 1.0])
    x = normalize_vec(np.cross(ref, forward))
    y = np.cross(forward, x)
    return x, y


def _yaw_pitch(direction, forward):
    x, y = _local_frame(forward)
    dx = float(direction @ x)
    dy = float(direction @ y)
    dz = float(direction @ forward)
    yaw = np.arctan2(dx, dz)
    pitch = np.arctan2(dy, np.hypot(dx, dz))
    return yaw, pitch


def _direction_from_yaw_pitch(yaw, pitch, forward):
    x, y = _local_frame(forward)
    cp = np.cos(pitch)
    return cp * np.sin(yaw) * x + np.sin(pitch) * y + cp * np.cos(yaw) * forward


def _solve_eye(eye: EyeModel, center_w, forward_w, target, index, clamp):
    offset = np.asarray(target, dtype=float) - center_w
    dist = np.linalg.norm(offset)
    if dist < 1e-9:
        raise TargetAtEyeCenter(f"target coincides with eye {index}")
    direction = offset / dist
    yaw, pitch = _yaw_pitch(direction, forward_w)
    violations = []
    if abs(yaw) > eye.yaw_limit:
        violations.append(LimitViolation(index, "yaw", float(yaw), eye.yaw_limit))
    if abs(pitch) > eye.pitch_limit:
        violations.append(LimitViolation(index, "pitch", float(pitch), eye.pitch_limit))
    if violations and not clamp:
        raise RotationLimitExceeded(index)
    if violations:
        yaw = float(np.clip(yaw, -eye.yaw_limit, eye.yaw_limit))
        pitch = float(np.clip(pitch, -eye.pitch_limit, eye.pitch_limit))
        direction = _direction_from_yaw_pitch(yaw, pitch, forward_w)
    q = quat_between(forward_w, direction)
    return EyeRotation(quaternion=q, direction=quat_rotate(q, forward_w)), violations


def fixate(rig: AvatarRig, target) -> list[EyeRotation]:
    """Rotate every eye to fixate a world-frame target point.

    Raises RotationLimitExceeded (first offending eye) when the target is
    outside some eye's yaw/pitch range; see fixate_clamped for the
    saturating variant.
    """
    centers = rig.eye_centers_world()
    forwards = rig.rest_forwards_world()
    rotations = []
    for i, eye in enumerate(rig.eyes):
        rot, _ = _solve_eye(eye, centers[i], forwards[i], target, i, clamp=False)
        rotations.append(rot)
    return rotations


def fixate_clamped(rig: AvatarRig, target) -> tuple[list[EyeRotation], list[LimitViolation]]:
    """Like fixate, but saturates at the limits and reports what was clamped."""
    centers = rig.eye_centers_world()
    forwards = rig.rest_forwards_world()
    rotations = []
    violations = []
    for i, eye in enumerate(rig.eyes):
        rot, v = _solve_eye(eye, centers[i], forwards[i], target, i, clamp=True)
        rotations.append(rot)
        violations.extend(v)
    return rotations, violations


def recognized_gaze(rig: AvatarRig, rotations) -> np.ndarray:
    """Weighted aggregate gaze direction across all eyes.

    The per-eye contributions are combined as normalize(sum_i w_i * dir_i);
    antipodal eye directions can cancel, which is reported as degenerate.
    """
    if len(rotations) != len(rig):
        raise ValueError("one rotation per eye required")
    dirs = np.array([r.direction for r in rotations])
    combined = rig.weights @ dirs
    n = np.linalg.norm(combined)
    if n < 1e-9:
        raise DegenerateAggregate("weighted eye directions cancel")
    return combined / n


def fixation_from_vector(direction, distance, anchor=(0.0, 0.0, 0.0)) -> FixationCommand:
    """Build the fixation command for a gaze vector, distance, and anchor."""
    return FixationCommand(direction=direction, distance=float(distance),
                           anchor=np.asarray(anchor, dtype=float))


# ---------------------------------------------------------------------------
# Rig files


def two_eye_rig(ipd_mm: float = 64.0, **kwargs) -> AvatarRig:
    """Conventional two-eye rig looking down +z, eyes split across x."""
    half = ipd_mm / 2.0
    return AvatarRig(eyes=(
        EyeModel(center=(-half, 0.0, 0.0), rest_forward=(0.0, 0.0, 1.0), **kwargs),
        EyeModel(center=(half, 0.0, 0.0), rest_forward=(0.0, 0.0, 1.0), **kwargs),
    ))


def ring_rig(n_eyes: int, radius_mm: float = 40.0, **kwargs) -> AvatarRig:
    """N eyes on a circle in the x-y plane, all resting along +z."""
    eyes = []
    for k in range(n_eyes):
        a = 2.0 * np.pi * k / n_eyes
        eyes.append(EyeModel(
            center=(radius_mm * np.cos(a), radius_mm * np.sin(a), 0.0),
            rest_forward=(0.0, 0.0, 1.0), **kwargs,
        ))
    return AvatarRig(eyes=tuple(eyes))


def rig_to_dict(rig: AvatarRig) -> dict:
    return {
        "eyes": [
            {
                "center": [float(v) for v in e.center],
                "rest_forward": [float(v) for v in e.rest_forward],
                "yaw_limit": float(e.yaw_limit),
                "pitch_limit": float(e.pitch_limit),
            }
            for e in rig.eyes
        ],
        "weights": [float(w) for w in rig.weights],
        "head_pose": {
            "quaternion_wxyz": [float(v) for v in rig.head_pose.quaternion],
            "translation_mm": [float(v) for v in rig.head_pose.translation],
        },
    }


def rig_from_dict(data: dict) -> AvatarRig:
    eyes = tuple(
        EyeModel(
            center=e["center"],
            rest_forward=e["rest_forward"],
            yaw_limit=float(e.get("yaw_limit", np.deg2rad(45.0))),
            pitch_limit=float(e.get("pitch_limit", np.deg2rad(35.0))),
        )
        for e in data["eyes"]
    )
    head = data.get("head_pose", {})
    return AvatarRig(
        eyes=eyes,
        weights=data.get("weights"),
        head_pose=HeadPose(
            quaternion=np.asarray(head.get("quaternion_wxyz", [1, 0, 0, 0]), dtype=float),
            translation=np.asarray(head.get("translation_mm", [0, 0, 0]), dtype=float),
        ),
    )


def load_rig(path) -> AvatarRig:
    with open(path, "r", encoding="utf-8") as f:
        return rig_from_dict(json.load(f))


def save_rig(path, rig: AvatarRig) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(rig_to_dict(rig), f, indent=2, sort_keys=True)
        f.write("\n")
