"""Camera intrinsics estimation from views of a planar target.

Pipeline: per-view plane-to-image homography (normalized DLT), closed-form
intrinsics from the homography constraints, per-view pose decomposition,
then joint nonlinear refinement of intrinsics, distortion, and poses by
minimizing total reprojection error.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import least_squares

from .camera import CameraIntrinsics, DistortionCoefficients, distort_normalized
from .errors import DegenerateViews, InsufficientPoints
from .rotation import matrix_to_rotvec, rotvec_to_matrix

MIN_VIEWS = 3
MIN_POINTS_PER_VIEW = 4


def _plane_coordinates(world):
    """Orthonormal in-plane coordinates of (approximately) coplanar points."""
    world = np.asarray(world, dtype=float)
    centroid = world.mean(axis=0)
    centered = world - centroid
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    if s[0] <= 0 or s[1] / s[0] < 1e-9:
        raise InsufficientPoints("planar view points are collinear")
    if s[2] / s[0] > 1e-6:
        raise InsufficientPoints("view points are not coplanar")
    basis = vt[:2].T  # (3, 2) orthonormal in-plane axes
    return centered @ basis


def _normalize_2d(pts):
    pts = np.asarray(pts, dtype=float)
    mean = pts.mean(axis=0)
    d = pts - mean
    scale = np.sqrt(2.0) / max(np.mean(np.linalg.norm(d, axis=1)), 1e-12)
    T = np.array([
        [scale, 0.0, -scale * mean[0]],
        [0.0, scale, -scale * mean[1]],
        [0.0, 0.0, 1.0],
    ])
    return d * scale, T


def _homography(plane_xy, image_uv):
    """DLT homography mapping plane coordinates to pixel coordinates."""
    src, Ts = _normalize_2d(plane_xy)
    dst, Td = _normalize_2d(image_uv)
    n = src.shape[0]
    A = np.zeros((2 * n, 9))
    for i in range(n):
        X, Y = src[i]
        u, v = dst[i]
        A[2 * i] = [-X, -Y, -1, 0, 0, 0, u * X, u * Y, u]
        A[2 * i + 1] = [0, 0, 0, -X, -Y, -1, v * X, v * Y, v]
    _, _, vt = np.linalg.svd(A)
    Hn = vt[-1].reshape(3, 3)
    H = np.linalg.inv(Td) @ Hn @ Ts
    return H / H[2, 2]


def _vij(H, i, j):
    return np.array([
        H[0, i] * H[0, j],
        H[0, i] * H[1, j] + H[1, i] * H[0, j],
        H[1, i] * H[1, j],
        H[2, i] * H[0, j] + H[0, i] * H[2, j],
        H[2, i] * H[1, j] + H[1, i] * H[2, j],
        H[2, i] * H[2, j],
    ])


def _intrinsics_from_homographies(Hs, resolution):
    V = np.zeros((2 * len(Hs), 6))
    for k, H in enumerate(Hs):
        V[2 * k] = _vij(H, 0, 1)
        V[2 * k + 1] = _vij(H, 0, 0) - _vij(H, 1, 1)
    _, s, vt = np.linalg.svd(V)
    # a valid solution leaves exactly one near-null direction; a second one
    # means the target orientations do not constrain the intrinsics
    if s[4] / s[0] < 1e-9:
        raise DegenerateViews("views share an orientation; rotate the target between views")
    b11, b12, b22, b13, b23, b33 = vt[-1]
    denom = b11 * b22 - b12 * b12
    cy = (b12 * b13 - b11 * b23) / denom
    lam = b33 - (b13 * b13 + cy * (b12 * b13 - b11 * b23)) / b11
    fx = np.sqrt(abs(lam / b11))
    fy = np.sqrt(abs(lam * b11 / denom))
    cx = -b13 * fx * fx / lam
    w, h = resolution
    return CameraIntrinsics(
        fx=float(fx),
        fy=float(fy),
        cx=float(np.clip(cx, 0.0, w)),
        cy=float(np.clip(cy, 0.0, h)),
        resolution=resolution,
    )


def _pose_from_homography(K, H):
    invK = np.linalg.inv(K)
    h1, h2, h3 = H[:, 0], H[:, 1], H[:, 2]
    r1 = invK @ h1
    r2 = invK @ h2
    scale = 1.0 / max(0.5 * (np.linalg.norm(r1) + np.linalg.norm(r2)), 1e-12)
    r1, r2 = r1 * scale, r2 * scale
    R = np.column_stack([r1, r2, np.cross(r1, r2)])
    U, _, Vt = np.linalg.svd(R)
    R = U @ Vt
    if np.linalg.det(R) < 0:
        R = U @ np.diag([1.0, 1.0, -1.0]) @ Vt
    t = scale * (invK @ h3)
    if t[2] < 0:
        R = R @ np.diag([-1.0, -1.0, 1.0])
        t = -t
    return matrix_to_rotvec(R), t


def _project_model(plane_xy, rvec, tvec, fx, fy, cx, cy, dist):
    R = rotvec_to_matrix(rvec)
    pts = np.column_stack([plane_xy, np.zeros(len(plane_xy))])
    cam = pts @ R.T + tvec
    z = np.where(np.abs(cam[:, 2]) < 1e-9, 1e-9, cam[:, 2])
    xy = cam[:, :2] / z[:, None]
    xy = distort_normalized(xy, dist)
    return np.column_stack([fx * xy[:, 0] + cx, fy * xy[:, 1] + cy])


def fit_intrinsics(views, resolution=(1440, 1080)):
    """Estimate intrinsics and distortion from planar-target views.

    Args:
        views: sequence of (world_points (N,3), image_points (N,2)) pairs,
            each view's world points coplanar, at least 4 per view.
        resolution: sensor (width, height) in pixels.

    Returns:
        (CameraIntrinsics, DistortionCoefficients, residual RMS in pixels).
    """
    if len(views) < MIN_VIEWS:
        raise InsufficientPoints(f"need at least {MIN_VIEWS} views, got {len(views)}")
    plane_views = []
    image_views = []
    for world, image in views:
        world = np.asarray(world, dtype=float)
        image = np.asarray(image, dtype=float)
        if len(world) < MIN_POINTS_PER_VIEW or len(world) != len(image):
            raise InsufficientPoints(
                f"each view needs >= {MIN_POINTS_PER_VIEW} matched points"
            )
        plane_views.append(_plane_coordinates(world))
        image_views.append(image)

    Hs = [_homography(p, i) for p, i in zip(plane_views, image_views)]
    K0 = _intrinsics_from_homographies(Hs, resolution)
    poses = [_pose_from_homography(K0.matrix, H) for H in Hs]

    n_views = len(views)
    p0 = np.zeros(9 + 6 * n_views)
    p0[0:4] = [K0.fx, K0.fy, K0.cx, K0.cy]
    for i, (rvec, tvec) in enumerate(poses):
        p0[9 + 6 * i : 12 + 6 * i] = rvec
        p0[12 + 6 * i : 15 + 6 * i] = tvec

    def residuals(p):
        fx, fy, cx, cy = p[0:4]
        dist = DistortionCoefficients(k1=p[4], k2=p[5], p1=p[6], p2=p[7], k3=p[8])
        out = []
        for i in range(n_views):
            rvec = p[9 + 6 * i : 12 + 6 * i]
            tvec = p[12 + 6 * i : 15 + 6 * i]
            pred = _project_model(plane_views[i], rvec, tvec, fx, fy, cx, cy, dist)
            out.append((pred - image_views[i]).ravel())
        return np.concatenate(out)

    sol = least_squares(residuals, p0, method="lm", xtol=1e-14, ftol=1e-14, max_nfev=4000)
    fx, fy, cx, cy = sol.x[0:4]
    w, h = resolution
    intr = CameraIntrinsics(
        fx=float(fx),
        fy=float(fy),
        cx=float(np.clip(cx, 0.0, w)),
        cy=float(np.clip(cy, 0.0, h)),
        resolution=(int(w), int(h)),
    )
    dist = DistortionCoefficients(
        k1=float(sol.x[4]), k2=float(sol.x[5]),
        p1=float(sol.x[6]), p2=float(sol.x[7]), k3=float(sol.x[8]),
    )
    r = sol.fun.reshape(-1, 2)
    rms = float(np.sqrt(np.mean(np.sum(r * r, axis=1))))
    return intr, dist, rms
