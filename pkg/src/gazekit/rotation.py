"""Quaternion and rotation-vector helpers.

Quaternions are numpy arrays ``[w, x, y, z]`` with unit norm; rotation
vectors are axis*angle triples. All functions return new arrays.
"""

import numpy as np

_EPS = 1e-12

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def normalize_vec(v):
    "Unit vector along v; raises on zero input."
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n < _EPS:
        raise ValueError("cannot normalize a zero-length vector")
    return v / n


def normalize_quat(q):
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q)
    if n < _EPS:
        raise ValueError("cannot normalize a zero quaternion")
    return q / n


def quat_mul(a, b):
    "Hamilton product a*b (apply b first, then a)."
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_conj(q):
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q, v):
    "Rotate vector v by unit quaternion q."
    w, x, y, z = q
    u = np.array([x, y, z])
    v = np.asarray(v, dtype=float)
    # q v q* expanded: v + 2w(u x v) + 2(u x (u x v))
    uv = np.cross(u, v)
    return v + 2.0 * w * uv + 2.0 * np.cross(u, uv)


def quat_from_axis_angle(axis, angle):
    axis = normalize_vec(axis)
    half = 0.5 * angle
    return np.concatenate([[np.cos(half)], np.sin(half) * axis])


def quat_angle(q):
    "Rotation angle of q in [0, pi]."
    q = normalize_quat(q)
    return 2.0 * np.arctan2(np.linalg.norm(q[1:]), abs(q[0]))


def quat_between(a, b):
    """Shortest-arc quaternion rotating unit vector a onto unit vector b.

    For antiparallel inputs the 180-degree axis is chosen deterministically
    (any axis orthogonal to a).
    """
    a = normalize_vec(a)
    b = normalize_vec(b)
    d = float(np.dot(a, b))
    if d < -1.0 + 1e-12:
        axis = np.cross(a, [1.0, 0.0, 0.0])
        if np.linalg.norm(axis) < 1e-6:
            axis = np.cross(a, [0.0, 1.0, 0.0])
        return quat_from_axis_angle(axis, np.pi)
    w = 1.0 + d
    xyz = np.cross(a, b)
    return normalize_quat(np.concatenate([[w], xyz]))


def quat_to_matrix(q):
    w, x, y, z = normalize_quat(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def matrix_to_quat(R):
    "Unit quaternion of a proper rotation matrix (Shepperd's method)."
    R = np.asarray(R, dtype=float)
    tr = R[0, 0] + R[1, 1] + R[2, 2]
    if tr > 0.0:
        s = np.sqrt(tr + 1.0) * 2.0
        q = np.array([
            0.25 * s,
            (R[2, 1] - R[1, 2]) / s,
            (R[0, 2] - R[2, 0]) / s,
            (R[1, 0] - R[0, 1]) / s,
        ])
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
        q = np.array([
            (R[2, 1] - R[1, 2]) / s,
            0.25 * s,
            (R[0, 1] + R[1, 0]) / s,
            (R[0, 2] + R[2, 0]) / s,
        ])
    elif R[1, 1] > R[2, 2]:
        s = np.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2.0
        q = np.array([
            (R[0, 2] - R[2, 0]) / s,
            (R[0, 1] + R[1, 0]) / s,
            0.25 * s,
            (R[1, 2] + R[2, 1]) / s,
        ])
    else:
        s = np.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2.0
        q = np.array([
            (R[1, 0] - R[0, 1]) / s,
            (R[0, 2] + R[2, 0]) / s,
            (R[1, 2] + R[2, 1]) / s,
            0.25 * s,
        ])
    if q[0] < 0:
        q = -q
    return normalize_quat(q)


def rotvec_to_matrix(r):
    "Rodrigues formula: rotation matrix of an axis*angle vector."
    r = np.asarray(r, dtype=float)
    theta = np.linalg.norm(r)
    if theta < _EPS:
        return np.eye(3)
    k = r / theta
    K = np.array([
        [0.0, -k[2], k[1]],
        [k[2], 0.0, -k[0]],
        [-k[1], k[0], 0.0],
    ])
    return np.eye(3) + np.sin(theta) * K + (1.0 - np.cos(theta)) * (K @ K)


def matrix_to_rotvec(R):
    R = np.asarray(R, dtype=float)
    cos_theta = np.clip((np.trace(R) - 1.0) * 0.5, -1.0, 1.0)
    theta = np.arccos(cos_theta)
    if theta < 1e-10:
        return np.zeros(3)
    if np.pi - theta < 1e-6:
        # near 180 degrees the antisymmetric part vanishes; recover the
        # axis from the symmetric part instead
        A = (R + np.eye(3)) * 0.5
        axis = normalize_vec(np.sqrt(np.maximum(np.diag(A), 0.0)))
        # fix signs using the largest off-diagonal entries
        if A[0, 1] < 0:
            axis[1] = -axis[1]
        if A[0, 2] < 0:
            axis[2] = -axis[2]
        return axis * theta
    axis = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    return axis / (2.0 * np.sin(theta)) * theta


def angle_between(a, b):
    "Angle in radians between two (not necessarily unit) vectors."
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    cross = np.linalg.norm(np.cross(a, b))
    dot = float(np.dot(a, b))
    return float(np.arctan2(cross, dot))
