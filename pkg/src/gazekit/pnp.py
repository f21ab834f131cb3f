"""Exterior orientation and the joint pose/object-point/gaze objective.

The joint problem couples three energies: the pose error over known
world-to-image correspondences, the reprojection error of the unknown
object point at its observed pixel, and the angular deviation of the
implied gaze line from an ideal direction. The object point is
parameterized by a single depth along the ray through its pixel, which
pins its reprojection to that pixel by construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import camera
from .camera import CameraIntrinsics, DistortionCoefficients, NO_DISTORTION, Ray
from .errors import (
    CoincidentPoints,
    DegenerateConfiguration,
    DepthOutOfBounds,
    InsufficientPoints,
    NoConvergence,
    RayParallelToPlane,
)
from .rotation import (
    angle_between,
    matrix_to_quat,
    matrix_to_rotvec,
    normalize_quat,
    normalize_vec,
    quat_to_matrix,
    rotvec_to_matrix,
)

MIN_PNP_POINTS = 6

# Levenberg-style damping schedule
LM_INIT_DAMPING = 1e-3
LM_DAMPING_UP = 10.0
LM_DAMPING_DOWN = 10.0
LM_MAX_ITER = 100
LM_REL_TOL = 1e-10


@dataclass(frozen=True)
class Pose:
    """World-to-camera rigid transform: x_cam = R(q) @ x_world + t."""

    quaternion: np.ndarray  # unit, [w, x, y, z]
    translation: np.ndarray  # mm

    def __post_init__(self):
        object.__setattr__(self, "quaternion", normalize_quat(self.quaternion))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=float))

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.array([1.0, 0.0, 0.0, 0.0]), np.zeros(3))

    @classmethod
    def from_matrix(cls, R, t) -> "Pose":
        return cls(matrix_to_quat(R), np.asarray(t, dtype=float))

    @property
    def matrix(self) -> np.ndarray:
        return quat_to_matrix(self.quaternion)

    @property
    def camera_center(self) -> np.ndarray:
        "Camera origin expressed in the world frame."
        return -self.matrix.T @ self.translation

    def to_camera(self, points_world):
        points_world = np.asarray(points_world, dtype=float)
        return points_world @ self.matrix.T + self.translation

    def to_dict(self) -> dict:
        return {
            "quaternion_wxyz": [float(v) for v in self.quaternion],
            "translation_mm": [float(v) for v in self.translation],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Pose":
        return cls(np.asarray(data["quaternion_wxyz"], dtype=float),
                   np.asarray(data["translation_mm"], dtype=float))


# ---------------------------------------------------------------------------
# Depth policies


@dataclass(frozen=True)
class FixedDepth:
    """Place the object point a fixed distance along the ray, mm."""

    depth_mm: float

    def __post_init__(self):
        if self.depth_mm <= 0:
            raise DepthOutOfBounds("fixed depth must be positive")

    def resolve(self, origin, direction) -> float:
        return float(self.depth_mm)


@dataclass(frozen=True)
class PlaneIntersection:
    """Intersect the ray with a world plane normal . X = offset."""

    normal: tuple[float, float, float]
    offset: float

    def resolve(self, origin, direction) -> float:
        n = np.asarray(self.normal, dtype=float)
        denom = float(n @ direction)
        if abs(denom) < 1e-12:
            raise RayParallelToPlane("ray is parallel to the target plane")
        s = (self.offset - float(n @ origin)) / denom
        if s <= 0:
            raise DepthOutOfBounds("plane intersection lies behind the camera")
        return s


@dataclass(frozen=True)
class DepthPrior:
    """A prior depth with hard bounds, mm."""

    depth_mm: float
    bounds: tuple[float, float]

    def __post_init__(self):
        lo, hi = self.bounds
        if not (0 < lo <= hi):
            raise DepthOutOfBounds("bounds must satisfy 0 < lo <= hi")
        if not (lo <= self.depth_mm <= hi):
            raise DepthOutOfBounds("prior depth outside its own bounds")

    def resolve(self, origin, direction) -> float:
        return float(self.depth_mm)


DEFAULT_DEPTH_POLICY = FixedDepth(1000.0)


@dataclass(frozen=True)
class ObjectPointEstimate:
    """Object point on the ray through its source pixel, world frame."""

    point: np.ndarray
    depth: float
    source_pixel: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float))
        object.__setattr__(self, "source_pixel", np.asarray(self.source_pixel, dtype=float))


@dataclass(frozen=True)
class JointObjectiveWeights:
    """Weights for the pose, reprojection, and gaze energies."""

    pose: float = 1.0
    reproj: float = 1.0
    gaze: float = 1.0

    def __post_init__(self):
        if min(self.pose, self.reproj, self.gaze) < 0:
            raise ValueError("weights must be nonnegative")
        if max(self.pose, self.reproj, self.gaze) == 0:
            raise ValueError("at least one weight must be positive")


# ---------------------------------------------------------------------------
# Core operations


def gaze_vector_colocated(x_obj, center):
    """Unit gaze direction from an eye colocated with the camera center.

    Invariant to the distance of x_obj: only the direction survives, which
    is what makes monocular depth ambiguity harmless in this configuration.
    """
    x_obj = np.asarray(x_obj, dtype=float)
    center = np.asarray(center, dtype=float)
    d = x_obj - center
    n = np.linalg.norm(d)
    if n < 1e-12:
        raise CoincidentPoints("object point coincides with the eye center")
    return d / n


def reprojection_error(pose: Pose, world, image, intr: CameraIntrinsics,
                       dist: DistortionCoefficients = NO_DISTORTION) -> float:
    """Root-mean-square pixel error of world points under a pose."""
    world = np.atleast_2d(np.asarray(world, dtype=float))
    image = np.atleast_2d(np.asarray(image, dtype=float))
    if len(world) == 0:
        raise InsufficientPoints("need at least one correspondence")
    pred = camera.project(pose.to_camera(world), intr, dist)
    err = pred - image
    return float(np.sqrt(np.mean(np.sum(err * err, axis=1))))


def _check_configuration(world):
    world = np.atleast_2d(world)
    if len(world) < MIN_PNP_POINTS:
        raise InsufficientPoints(f"need >= {MIN_PNP_POINTS} correspondences, got {len(world)}")
    centered = world - world.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    if s[0] <= 0 or s[1] / s[0] < 1e-9:
        raise DegenerateConfiguration("world points are collinear")
    if s[2] / s[0] < 1e-9:
        raise DegenerateConfiguration(
            "world points are coplanar; the 6-point linear stage needs general position"
        )


def _dlt_pose(world, xy_norm):
    """Direct linear transform for the full 3x4 projection, normalized data."""
    n = len(world)
    # condition both sides
    cw = world.mean(axis=0)
    sw = np.sqrt(3.0) / max(np.mean(np.linalg.norm(world - cw, axis=1)), 1e-12)
    Tw = np.eye(4)
    Tw[:3, :3] *= sw
    Tw[:3, 3] = -sw * cw
    ci = xy_norm.mean(axis=0)
    si = np.sqrt(2.0) / max(np.mean(np.linalg.norm(xy_norm - ci, axis=1)), 1e-12)
    Ti = np.array([[si, 0, -si * ci[0]], [0, si, -si * ci[1]], [0, 0, 1.0]])

    Xh = np.hstack([(world - cw) * sw, np.ones((n, 1))])
    xn = (xy_norm - ci) * si
    A = np.zeros((2 * n, 12))
    for i in range(n):
        X = Xh[i]
        u, v = xn[i]
        A[2 * i, 0:4] = X
        A[2 * i, 8:12] = -u * X
        A[2 * i + 1, 4:8] = X
        A[2 * i + 1, 8:12] = -v * X
    _, _, vt = np.linalg.svd(A)
    P = vt[-1].reshape(3, 4)
    P = np.linalg.inv(Ti) @ P @ Tw

    M = P[:, :3]
    if np.linalg.det(M) < 0:
        P = -P
        M = P[:, :3]
    scale = np.linalg.norm(P[2, :3])
    P = P / scale
    U, S, Vt = np.linalg.svd(P[:, :3])
    R = U @ Vt
    if np.linalg.det(R) < 0:
        R = U @ np.diag([1.0, 1.0, -1.0]) @ Vt
    t = P[:, 3]
    if np.mean((world @ R.T + t)[:, 2]) < 0:
        # wrong side of the plane at infinity
        R = -R
        U, S, Vt = np.linalg.svd(R)
        R = U @ Vt
        if np.linalg.det(R) < 0:
            R = U @ np.diag([1.0, 1.0, -1.0]) @ Vt
        t = -t
    return R, t


def _levenberg(residual_fn, p0, trace=None):
    """Damped least squares with a multiplicative damping schedule.

    The accepted objective value is non-increasing by construction; stops
    on relative improvement below LM_REL_TOL or the iteration cap. Pass a
    list as trace to collect the accepted objective values.
    """
    p = np.asarray(p0, dtype=float)
    r = residual_fn(p)
    cost = float(r @ r)
    if trace is not None:
        trace.append(cost)
    lam = LM_INIT_DAMPING
    n = p.size

    def jacobian(p, r0):
        J = np.zeros((r0.size, n))
        for j in range(n):
            step = 1e-7 * max(1.0, abs(p[j]))
            dp = np.zeros(n)
            dp[j] = step
            J[:, j] = (residual_fn(p + dp) - residual_fn(p - dp)) / (2 * step)
        return J

    for _ in range(LM_MAX_ITER):
        J = jacobian(p, r)
        g = J.T @ r
        H = J.T @ J
        improved = False
        for _ in range(25):
            try:
                dp = np.linalg.solve(H + lam * np.diag(np.maximum(np.diag(H), 1e-12)), -g)
            except np.linalg.LinAlgError:
                dp = np.linalg.lstsq(H + lam * np.eye(n), -g, rcond=None)[0]
            r_new = residual_fn(p + dp)
            cost_new = float(r_new @ r_new)
            if cost_new < cost:
                rel = (cost - cost_new) / max(cost, 1e-300)
                p = p + dp
                r = r_new
                cost = cost_new
                if trace is not None:
                    trace.append(cost)
                lam = max(lam / LM_DAMPING_DOWN, 1e-12)
                improved = True
                if rel < LM_REL_TOL:
                    return p, cost
                break
            lam = min(lam * LM_DAMPING_UP, 1e12)
        if not improved:
            return p, cost
    return p, cost


def solve_pnp(world, image, intr: CameraIntrinsics,
              dist: DistortionCoefficients = NO_DISTORTION,
              trace=None) -> tuple[Pose, float]:
    """Estimate the world-to-camera pose from 3D-2D correspondences.

    Linear initialization on undistorted normalized coordinates followed by
    damped least-squares refinement of the pixel reprojection error.

    Returns (pose, residual RMS in pixels). Pass a list as trace to
    collect the accepted objective values per refinement step.
    """
    world = np.atleast_2d(np.asarray(world, dtype=float))
    image = np.atleast_2d(np.asarray(image, dtype=float))
    if world.shape[0] != image.shape[0]:
        raise InsufficientPoints("world/image lengths differ")
    _check_configuration(world)
    if not np.all(np.isfinite(world)) or not np.all(np.isfinite(image)):
        raise DegenerateConfiguration("correspondences must be finite")

    ideal = camera.undistort(image, intr, dist)
    xy_norm = np.column_stack([
        (ideal[:, 0] - intr.cx - intr.skew * (ideal[:, 1] - intr.cy) / intr.fy) / intr.fx,
        (ideal[:, 1] - intr.cy) / intr.fy,
    ])
    R0, t0 = _dlt_pose(world, xy_norm)

    def residuals(p):
        R = rotvec_to_matrix(p[:3])
        cam = world @ R.T + p[3:6]
        z = np.where(cam[:, 2] < 1e-9, 1e-9, cam[:, 2])
        xy = camera.distort_normalized(cam[:, :2] / z[:, None], dist)
        pred = np.column_stack([
            intr.fx * xy[:, 0] + intr.skew * xy[:, 1] + intr.cx,
            intr.fy * xy[:, 1] + intr.cy,
        ])
        return (pred - image).ravel()

    p0 = np.concatenate([matrix_to_rotvec(R0), t0])
    p, cost = _levenberg(residuals, p0, trace=trace)
    if not np.all(np.isfinite(p)):
        raise NoConvergence("pose refinement diverged")
    pose = Pose.from_matrix(rotvec_to_matrix(p[:3]), p[3:6])
    rms = float(np.sqrt(cost / len(world)))
    return pose, rms


def ray_in_world(pixel, pose: Pose, intr: CameraIntrinsics,
                 dist: DistortionCoefficients = NO_DISTORTION) -> Ray:
    """World-frame ray from the camera center through a pixel."""
    d_cam = camera.pixel_directions(np.asarray(pixel, dtype=float), intr, dist)
    return Ray(origin=pose.camera_center, direction=pose.matrix.T @ d_cam)


def estimate_object_point(pixel, pose: Pose, intr: CameraIntrinsics,
                          dist: DistortionCoefficients = NO_DISTORTION,
                          depth_policy=DEFAULT_DEPTH_POLICY) -> ObjectPointEstimate:
    """Place the observed object on its camera ray at a policy-chosen depth."""
    ray = ray_in_world(pixel, pose, intr, dist)
    s = depth_policy.resolve(ray.origin, ray.direction)
    return ObjectPointEstimate(point=ray.point_at(s), depth=s,
                               source_pixel=np.asarray(pixel, dtype=float))


@dataclass(frozen=True)
class JointResult:
    pose: Pose
    estimate: ObjectPointEstimate
    objective_value: float
    energies: dict = field(default_factory=dict)


def joint_optimize(world, image, target_pixel, eye_center,
                   ideal_gaze, intr: CameraIntrinsics,
                   dist: DistortionCoefficients = NO_DISTORTION,
                   weights: JointObjectiveWeights = JointObjectiveWeights(),
                   depth_policy=DEFAULT_DEPTH_POLICY) -> JointResult:
    """Minimize the weighted sum of pose, reprojection, and gaze energies.

    The pose energy is the summed squared pixel error of the known
    correspondences; the reprojection energy is the squared pixel error of
    the object point at its target pixel (identically ~0 under the ray
    parameterization); the gaze energy is the squared angle between the
    eye-to-object direction and the ideal gaze. With ideal_gaze=None the
    gaze term is dropped and the result reduces to solve_pnp followed by
    estimate_object_point.
    """
    world = np.atleast_2d(np.asarray(world, dtype=float))
    image = np.atleast_2d(np.asarray(image, dtype=float))
    target_pixel = np.asarray(target_pixel, dtype=float)
    eye_center = np.asarray(eye_center, dtype=float)
    pose0, _ = solve_pnp(world, image, intr, dist)

    d_cam = camera.pixel_directions(target_pixel, intr, dist)
    s0 = depth_policy.resolve(pose0.camera_center, pose0.matrix.T @ d_cam)
    bounds = depth_policy.bounds if isinstance(depth_policy, DepthPrior) else None

    if ideal_gaze is None:
        est = estimate_object_point(target_pixel, pose0, intr, dist, depth_policy)
        energies = _energies(pose0, est, world, image, target_pixel, eye_center,
                             None, intr, dist)
        f = (weights.pose * energies["pose"]
             + weights.reproj * energies["reproj"]
             + weights.gaze * energies["gaze"])
        return JointResult(pose0, est, f, energies)

    v_ideal = normalize_vec(np.asarray(ideal_gaze, dtype=float))
    sw = np.sqrt([weights.pose, weights.reproj, weights.gaze])

    def unpack(p):
        R = rotvec_to_matrix(p[:3])
        pose = Pose.from_matrix(R, p[3:6])
        s = float(np.exp(p[6]))
        x_obj = pose.camera_center + s * (R.T @ d_cam)
        return pose, s, x_obj

    def residuals(p):
        pose, s, x_obj = unpack(p)
        cam = world @ pose.matrix.T + pose.translation
        z = np.where(cam[:, 2] < 1e-9, 1e-9, cam[:, 2])
        xy = camera.distort_normalized(cam[:, :2] / z[:, None], dist)
        pred = np.column_stack([
            intr.fx * xy[:, 0] + intr.skew * xy[:, 1] + intr.cx,
            intr.fy * xy[:, 1] + intr.cy,
        ])
        r_pose = sw[0] * (pred - image).ravel()
        obj_cam = pose.to_camera(x_obj)
        if obj_cam[2] <= 0:
            r_reproj = np.array([1e6, 1e6])
        else:
            r_reproj = sw[1] * (camera.project(obj_cam, intr, dist) - target_pixel)
        gaze_dir = x_obj - eye_center
        if np.linalg.norm(gaze_dir) < 1e-12:
            r_gaze = np.array([np.pi])
        else:
            r_gaze = np.array([sw[2] * angle_between(gaze_dir, v_ideal)])
        return np.concatenate([r_pose, r_reproj, r_gaze])

    p0 = np.concatenate([
        matrix_to_rotvec(pose0.matrix), pose0.translation, [np.log(s0)],
    ])
    p, _ = _levenberg(residuals, p0)
    if not np.all(np.isfinite(p)):
        raise NoConvergence("joint refinement diverged")
    pose, s, x_obj = unpack(p)
    if bounds is not None and not (bounds[0] <= s <= bounds[1]):
        raise DepthOutOfBounds(f"optimized depth {s:.3f} mm escapes {bounds}")
    est = ObjectPointEstimate(point=x_obj, depth=s, source_pixel=target_pixel)
    energies = _energies(pose, est, world, image, target_pixel, eye_center,
                         v_ideal, intr, dist)
    f = (weights.pose * energies["pose"]
         + weights.reproj * energies["reproj"]
         + weights.gaze * energies["gaze"])
    return JointResult(pose, est, f, energies)


def _energies(pose, est, world, image, target_pixel, eye_center, v_ideal, intr, dist):
    pred = camera.project(pose.to_camera(world), intr, dist)
    e_pose = float(np.sum((pred - image) ** 2))
    proj = camera.project(pose.to_camera(est.point), intr, dist)
    e_reproj = float(np.sum((proj - target_pixel) ** 2))
    if v_ideal is None:
        e_gaze = 0.0
    else:
        e_gaze = float(angle_between(est.point - eye_center, v_ideal) ** 2)
    return {"pose": e_pose, "reproj": e_reproj, "gaze": e_gaze}


# ---------------------------------------------------------------------------
# Scene files


def load_scene(path) -> dict:
    """Parse a joint-problem scene file into arrays ready for joint_optimize."""
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    corr = data["correspondences"]
    world = np.array([[c["X"], c["Y"], c["Z"]] for c in corr], dtype=float)
    image = np.array([[c["u"], c["v"]] for c in corr], dtype=float)
    weights = data.get("weights", {})
    return {
        "world": world,
        "image": image,
        "target_pixel": np.asarray(data["target_pixel"], dtype=float),
        "eye_center": np.asarray(data["eye_center"], dtype=float),
        "ideal_gaze": (None if data.get("ideal_gaze") is None
                       else np.asarray(data["ideal_gaze"], dtype=float)),
        "weights": JointObjectiveWeights(
            pose=float(weights.get("pose", 1.0)),
            reproj=float(weights.get("reproj", 1.0)),
            gaze=float(weights.get("gaze", 1.0)),
        ),
    }


def solve_scene(scene: dict, intr: CameraIntrinsics,
                dist: DistortionCoefficients = NO_DISTORTION) -> dict:
    """Run joint_optimize on a parsed scene and serialize the result."""
    result = joint_optimize(
        scene["world"], scene["image"], scene["target_pixel"],
        scene["eye_center"], scene["ideal_gaze"], intr, dist,
        weights=scene["weights"],
    )
    return {
        "pose": result.pose.to_dict(),
        "object_point_mm": [float(v) for v in result.estimate.point],
        "depth_mm": float(result.estimate.depth),
        "objective_value": result.objective_value,
        "energies": result.energies,
    }
