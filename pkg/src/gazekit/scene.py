"""Virtual scene wiring: display, image plane, and pixel-to-fixation mapping.

The physical camera sits at the rig's gaze anchor, so the ray cast through
any pixel and the gaze line toward the object seen at that pixel are the
same line. The image plane shows the camera feed at the display's pixel
pitch, at a configurable distance in front of the avatar.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import camera as cam
from .camera import CameraIntrinsics, DistortionCoefficients, NO_DISTORTION
from .pnp import DEFAULT_DEPTH_POLICY
from .rig import AvatarRig, FixationCommand
from .rotation import normalize_vec


@dataclass(frozen=True)
class DisplaySpec:
    """Physical size (mm) and pixel resolution of the transparent display."""

    physical_size: tuple[float, float]
    resolution: tuple[int, int]

    def __post_init__(self):
        if min(self.physical_size) <= 0 or min(self.resolution) <= 0:
            raise ValueError("display size and resolution must be positive")


# Reference hardware: 4-inch 320x360 transparent display in front of a
# 1440x1080 camera.
PAPER_DISPLAY = DisplaySpec(physical_size=(67.5, 75.9), resolution=(320, 360))
PAPER_CAMERA_RESOLUTION = (1440, 1080)


def image_plane_size(display: DisplaySpec, camera_resolution) -> tuple[float, float]:
    """Millimeter size of the image plane: the camera image at display pitch.

    W = W_d / W_o * W_i and H = H_d / H_o * H_i, where (W_d, H_d) is the
    display's physical size in mm, (W_o, H_o) its resolution, and
    (W_i, H_i) the camera resolution.
    """
    wi, hi = camera_resolution
    if wi <= 0 or hi <= 0:
        raise ValueError("camera resolution must be positive")
    wd, hd = display.physical_size
    wo, ho = display.resolution
    return (wd / wo * wi, hd / ho * hi)


def _camera_to_world(facing):
    """Basis mapping anchor-camera coordinates into the world frame."""
    ref = np.array([0.0, 1.0, 0.0])
    if abs(float(facing @ ref)) > 1.0 - 1e-9:
        ref = np.array([0.0, 0.0, 1.0])
    x = normalize_vec(np.cross(ref, facing))
    y = np.cross(facing, x)
    return np.column_stack([x, y, facing])


@dataclass(frozen=True)
class VirtualSceneConfig:
    """Avatar, colocated camera, and the image plane at distance f."""

    plane_distance_f: float
    image_plane_size: tuple[float, float]
    virtual_camera: CameraIntrinsics
    avatar: AvatarRig
    distortion: DistortionCoefficients = NO_DISTORTION

    def __post_init__(self):
        if self.plane_distance_f <= 0:
            raise ValueError("plane distance must be positive")
        if min(self.image_plane_size) <= 0:
            raise ValueError("image plane size must be positive")

    @property
    def anchor(self) -> np.ndarray:
        "Colocation point of the physical camera, world frame."
        return self.avatar.gaze_anchor

    @property
    def facing(self) -> np.ndarray:
        return self.avatar.facing

    @property
    def camera_to_world(self) -> np.ndarray:
        return _camera_to_world(self.facing)

    @property
    def virtual_camera_center(self) -> np.ndarray:
        "Viewer-side camera position: distance f in front of the avatar."
        return self.anchor + self.plane_distance_f * self.facing

    @property
    def virtual_camera_facing(self) -> np.ndarray:
        "The viewer-side camera looks back at the avatar's face."
        return -self.facing

    def plane_corners(self) -> np.ndarray:
        """Image-plane corners in the anchor-camera frame, (4, 3) mm."""
        w, h = self.image_plane_size
        f = self.plane_distance_f
        return np.array([
            [-w / 2, -h / 2, f],
            [w / 2, -h / 2, f],
            [w / 2, h / 2, f],
            [-w / 2, h / 2, f],
        ])


def build_scene(rig: AvatarRig, display: DisplaySpec, intr: CameraIntrinsics,
                dist: DistortionCoefficients = NO_DISTORTION,
                plane_distance_f: float = 1000.0) -> VirtualSceneConfig:
    """Assemble the virtual scene around a rig and a physical camera.

    The virtual camera's parameters are copied from the physical camera;
    the plane is sized from the display pitch and the camera resolution.
    """
    return VirtualSceneConfig(
        plane_distance_f=float(plane_distance_f),
        image_plane_size=image_plane_size(display, intr.resolution),
        virtual_camera=intr,
        avatar=rig,
        distortion=dist,
    )


def pixel_to_fixation(scene: VirtualSceneConfig, pixel,
                      depth_policy=DEFAULT_DEPTH_POLICY) -> FixationCommand:
    """Fixation command for a camera pixel through the colocated camera.

    The direction is the world-frame cast ray; the distance comes from the
    depth policy. Colocation makes the direction independent of the chosen
    distance, so an imprecise depth cannot bend the gaze line.
    """
    pixel = np.asarray(pixel, dtype=float)
    w, h = scene.virtual_camera.resolution
    if not (0.0 <= pixel[0] <= w and 0.0 <= pixel[1] <= h):
        raise ValueError(f"pixel {pixel} outside the {w}x{h} camera frame")
    d_cam = cam.pixel_directions(pixel, scene.virtual_camera, scene.distortion)
    direction = scene.camera_to_world @ d_cam
    anchor = scene.anchor
    distance = depth_policy.resolve(anchor, direction)
    return FixationCommand(direction=direction, distance=distance, anchor=anchor)
