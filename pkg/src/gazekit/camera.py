"""Pinhole camera model with radial-tangential distortion.

Conventions: 3D points are millimeters in the camera frame (x right along
image u, y along image v, z forward through the lens); pixels are sub-pixel
(u, v) pairs. Point arguments accept a single point ``(3,)`` / ``(2,)`` or a
batch ``(N, 3)`` / ``(N, 2)`` and return the matching shape.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, NonPositiveDepth

UNDISTORT_MAX_ITER = 50
UNDISTORT_TOL = 1e-12  # normalized image coordinates


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole parameters in pixels plus the sensor resolution."""

    fx: float
    fy: float
    cx: float
    cy: float
    skew: float = 0.0
    resolution: tuple[int, int] = (1440, 1080)

    def __post_init__(self):
        w, h = self.resolution
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (int(w) > 0 and int(h) > 0):
            raise ValueError("resolution must be positive")
        if not (0.0 <= self.cx <= w and 0.0 <= self.cy <= h):
            raise ValueError("principal point must lie on the sensor")
        object.__setattr__(self, "resolution", (int(w), int(h)))

    @property
    def matrix(self) -> np.ndarray:
        return np.array([
            [self.fx, self.skew, self.cx],
            [0.0, self.fy, self.cy],
            [0.0, 0.0, 1.0],
        ])

    def fov_degrees(self) -> tuple[float, float]:
        """Full horizontal/vertical field of view implied by the intrinsics."""
        w, h = self.resolution
        fov_h = 2.0 * np.arctan(0.5 * w / self.fx)
        fov_v = 2.0 * np.arctan(0.5 * h / self.fy)
        return float(np.degrees(fov_h)), float(np.degrees(fov_v))


@dataclass(frozen=True)
class DistortionCoefficients:
    """Radial (k1, k2, k3) and tangential (p1, p2) coefficients."""

    k1: float = 0.0
    k2: float = 0.0
    p1: float = 0.0
    p2: float = 0.0
    k3: float = 0.0

    def __post_init__(self):
        if not all(np.isfinite([self.k1, self.k2, self.p1, self.p2, self.k3])):
            raise ValueError("distortion coefficients must be finite")

    @property
    def is_zero(self) -> bool:
        return self.k1 == self.k2 == self.p1 == self.p2 == self.k3 == 0.0

    def as_array(self) -> np.ndarray:
        "Coefficients in the conventional [k1, k2, p1, p2, k3] file order."
        return np.array([self.k1, self.k2, self.p1, self.p2, self.k3])


NO_DISTORTION = DistortionCoefficients()


@dataclass(frozen=True)
class Ray:
    """Half-line from origin along a unit direction, millimeters."""

    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float))
        d = np.asarray(self.direction, dtype=float)
        n = np.linalg.norm(d)
        if abs(n - 1.0) > 1e-12:
            d = d / n
        object.__setattr__(self, "direction", d)

    def point_at(self, s: float) -> np.ndarray:
        return self.origin + s * self.direction


def distort_normalized(xy, dist: DistortionCoefficients):
    """Apply the radial-tangential model to normalized coordinates."""
    xy = np.asarray(xy, dtype=float)
    x = xy[..., 0]
    y = xy[..., 1]
    r2 = x * x + y * y
    radial = 1.0 + r2 * (dist.k1 + r2 * (dist.k2 + r2 * dist.k3))
    xd = x * radial + 2.0 * dist.p1 * x * y + dist.p2 * (r2 + 2.0 * x * x)
    yd = y * radial + dist.p1 * (r2 + 2.0 * y * y) + 2.0 * dist.p2 * x * y
    return np.stack([xd, yd], axis=-1)


def _distortion_jacobian(xy, dist: DistortionCoefficients):
    """2x2 Jacobians of the distortion map, shape (..., 2, 2)."""
    x = xy[..., 0]
    y = xy[..., 1]
    r2 = x * x + y * y
    radial = 1.0 + r2 * (dist.k1 + r2 * (dist.k2 + r2 * dist.k3))
    dr = dist.k1 + r2 * (2.0 * dist.k2 + 3.0 * dist.k3 * r2)
    jxx = radial + 2.0 * x * x * dr + 2.0 * dist.p1 * y + 6.0 * dist.p2 * x
    jxy = 2.0 * x * y * dr + 2.0 * dist.p1 * x + 2.0 * dist.p2 * y
    jyx = 2.0 * x * y * dr + 2.0 * dist.p1 * x + 2.0 * dist.p2 * y
    jyy = radial + 2.0 * y * y * dr + 6.0 * dist.p1 * y + 2.0 * dist.p2 * x
    J = np.empty(xy.shape[:-1] + (2, 2))
    J[..., 0, 0] = jxx
    J[..., 0, 1] = jxy
    J[..., 1, 0] = jyx
    J[..., 1, 1] = jyy
    return J


def undistort_normalized(xy_d, dist: DistortionCoefficients):
    """Invert the distortion model by damped Newton iteration.

    Raises NoConvergence if the residual in normalized coordinates is
    still above tolerance after the iteration cap.
    """
    xy_d = np.asarray(xy_d, dtype=float)
    if dist.is_zero:
        return xy_d.copy()
    xy = xy_d.copy()
    err = np.full(xy_d.shape[:-1], np.inf)
    for _ in range(UNDISTORT_MAX_ITER):
        delta = distort_normalized(xy, dist) - xy_d
        err_new = np.linalg.norm(delta, axis=-1)
        if np.all(err_new < UNDISTORT_TOL):
            return xy
        J = _distortion_jacobian(xy, dist)
        try:
            step = np.linalg.solve(J, delta[..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = delta  # singular Jacobian: fall back to fixed point
        # damp wherever the previous residual grew
        grew = err_new > err
        if np.any(grew):
            step = np.where(grew[..., None], 0.5 * step, step)
        xy = xy - step
        err = err_new
    raise NoConvergence(
        f"undistortion did not converge within {UNDISTORT_MAX_ITER} iterations"
    )


def _to_normalized(pixels, intr: CameraIntrinsics):
    pixels = np.asarray(pixels, dtype=float)
    v = (pixels[..., 1] - intr.cy) / intr.fy
    u = (pixels[..., 0] - intr.cx - intr.skew * v) / intr.fx
    return np.stack([u, v], axis=-1)


def _to_pixels(xy, intr: CameraIntrinsics):
    xy = np.asarray(xy, dtype=float)
    u = intr.fx * xy[..., 0] + intr.skew * xy[..., 1] + intr.cx
    v = intr.fy * xy[..., 1] + intr.cy
    return np.stack([u, v], axis=-1)


def project(points, intr: CameraIntrinsics, dist: DistortionCoefficients = NO_DISTORTION):
    """Project camera-frame 3D points to distorted pixel coordinates.

    Raises NonPositiveDepth when any point has z <= 0.
    """
    points = np.asarray(points, dtype=float)
    z = points[..., 2]
    if np.any(z <= 0.0):
        raise NonPositiveDepth("projection requires z > 0 for every point")
    xy = points[..., :2] / z[..., None]
    return _to_pixels(distort_normalized(xy, dist), intr)


def undistort(pixels, intr: CameraIntrinsics, dist: DistortionCoefficients = NO_DISTORTION):
    """Map distorted pixels to the pixels an ideal pinhole would record."""
    pixels = np.asarray(pixels, dtype=float)
    if not np.all(np.isfinite(pixels)):
        raise ValueError("pixels must be finite")
    if dist.is_zero:
        return pixels.copy()
    return _to_pixels(undistort_normalized(_to_normalized(pixels, intr), dist), intr)


def pixel_directions(pixels, intr: CameraIntrinsics, dist: DistortionCoefficients = NO_DISTORTION):
    """Unit ray directions (camera frame, z > 0) for one or many pixels."""
    xy = undistort_normalized(_to_normalized(pixels, intr), dist)
    d = np.concatenate([xy, np.ones(xy.shape[:-1] + (1,))], axis=-1)
    return d / np.linalg.norm(d, axis=-1, keepdims=True)


def cast_ray(pixel, intr: CameraIntrinsics, dist: DistortionCoefficients = NO_DISTORTION) -> Ray:
    """Ray from the camera origin through a pixel."""
    direction = pixel_directions(np.asarray(pixel, dtype=float), intr, dist)
    return Ray(origin=np.zeros(3), direction=direction)


# ---------------------------------------------------------------------------
# File formats


def intrinsics_to_dict(intr: CameraIntrinsics, dist: DistortionCoefficients = NO_DISTORTION) -> dict:
    return {
        "fx": intr.fx,
        "fy": intr.fy,
        "cx": intr.cx,
        "cy": intr.cy,
        "skew": intr.skew,
        "width": intr.resolution[0],
        "height": intr.resolution[1],
        "dist": [dist.k1, dist.k2, dist.p1, dist.p2, dist.k3],
    }


def intrinsics_from_dict(data: dict) -> tuple[CameraIntrinsics, DistortionCoefficients]:
    intr = CameraIntrinsics(
        fx=float(data["fx"]),
        fy=float(data["fy"]),
        cx=float(data["cx"]),
        cy=float(data["cy"]),
        skew=float(data.get("skew", 0.0)),
        resolution=(int(data["width"]), int(data["height"])),
    )
    d = data.get("dist", [0.0] * 5)
    if len(d) != 5:
        raise ValueError("dist must hold [k1, k2, p1, p2, k3]")
    dist = DistortionCoefficients(k1=d[0], k2=d[1], p1=d[2], p2=d[3], k3=d[4])
    return intr, dist


def load_intrinsics(path) -> tuple[CameraIntrinsics, DistortionCoefficients]:
    with open(path, "r", encoding="utf-8") as f:
        return intrinsics_from_dict(json.load(f))


def save_intrinsics(path, intr: CameraIntrinsics, dist: DistortionCoefficients = NO_DISTORTION) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(intrinsics_to_dict(intr, dist), f, indent=2, sort_keys=True)
        f.write("\n")


def read_correspondences_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read world/image correspondences from a CSV with header X,Y,Z,u,v."""
    world = []
    image = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        required = {"X", "Y", "Z", "u", "v"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError("correspondence CSV needs header columns X,Y,Z,u,v")
        for row in reader:
            world.append([float(row["X"]), float(row["Y"]), float(row["Z"])])
            image.append([float(row["u"]), float(row["v"])])
    return np.asarray(world, dtype=float), np.asarray(image, dtype=float)


def write_correspondences_csv(path, world, image) -> None:
    world = np.asarray(world, dtype=float)
    image = np.asarray(image, dtype=float)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["X", "Y", "Z", "u", "v"])
        for X, x in zip(world, image):
            writer.writerow([repr(float(X[0])), repr(float(X[1])), repr(float(X[2])),
                             repr(float(x[0])), repr(float(x[1]))])
