"""Shared fixtures and independent oracles for the test suite.

The oracle helpers deliberately avoid the library code paths they are used
to check: projection is done with raw matrix algebra and rotations come
from scipy.
"""

import numpy as np
import pytest
from scipy.spatial.transform import Rotation as ScipyRotation

from gazekit import CameraIntrinsics, DistortionCoefficients


@pytest.fixture
def ref_intrinsics():
    "Reference camera: fx=fy=1000, principal point at the sensor center."
    return CameraIntrinsics(fx=1000.0, fy=1000.0, cx=720.0, cy=540.0,
                            resolution=(1440, 1080))


@pytest.fixture
def zero_dist():
    return DistortionCoefficients()


def oracle_project(points, K, dist=None, R=None, t=None):
    """Reference projection: plain matrix algebra, optional pose and distortion.

    dist is (k1, k2, p1, p2, k3); K is the 3x3 intrinsic matrix.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if R is not None:
        points = points @ np.asarray(R).T + np.asarray(t)
    x = points[:, 0] / points[:, 2]
    y = points[:, 1] / points[:, 2]
    if dist is not None:
        k1, k2, p1, p2, k3 = dist
        r2 = x * x + y * y
        radial = 1 + k1 * r2 + k2 * r2**2 + k3 * r2**3
        xd = x * radial + 2 * p1 * x * y + p2 * (r2 + 2 * x * x)
        yd = y * radial + p1 * (r2 + 2 * y * y) + 2 * p2 * x * y
        x, y = xd, yd
    u = K[0, 0] * x + K[0, 1] * y + K[0, 2]
    v = K[1, 1] * y + K[1, 2]
    return np.column_stack([u, v])


def random_rotation(rng, max_angle_rad):
    "Uniform random axis, uniform angle up to max_angle_rad (scipy-backed)."
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = rng.uniform(0.0, max_angle_rad)
    return ScipyRotation.from_rotvec(axis * angle).as_matrix()


def point_line_distance(point, line_origin, line_direction):
    "Orthogonal distance from a point to an infinite line."
    d = np.asarray(line_direction, dtype=float)
    d = d / np.linalg.norm(d)
    w = np.asarray(point, dtype=float) - np.asarray(line_origin, dtype=float)
    return float(np.linalg.norm(np.cross(w, d)))


# -- acceptance reporting ----------------------------------------------------

_acceptance_results = []


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    try:
        from test_acceptance import CRITERIA
    except ImportError:
        return
    name = report.nodeid.split("::")[-1].split("[")[0]
    label = CRITERIA.get(name)
    if label:
        _acceptance_results.append((label, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for label, outcome in _acceptance_results:
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"  [{status}] {label}")
