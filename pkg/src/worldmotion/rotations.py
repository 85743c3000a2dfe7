"""Rotation helpers: axis-angle vectors, rotation matrices, quaternions, slerp.

Matrices follow the column-vector convention (``R @ v``); arrays of row
points are rotated with ``pts @ R.T``.
"""
from __future__ import annotations

import numpy as np

# Below this angle Rodrigues' sin/angle terms switch to their series expansion.
SMALL_ANGLE = 1e-8


def axis_angle_to_matrix(axis_angle: np.ndarray) -> np.ndarray:
    """Convert axis-angle vector(s) to rotation matrices via Rodrigues.

    Accepts shape (3,) or (..., 3) and returns (3, 3) or (..., 3, 3).
    Angles below 1e-8 rad use a second-order series instead of dividing
    by the angle.
    """
    aa = np.asarray(axis_angle, dtype=np.float64)
    squeeze = aa.ndim == 1
    aa = np.atleast_2d(aa)
    if aa.shape[-1] != 3:
        raise ValueError(f"axis-angle must have 3 components, got shape {aa.shape}")

    theta = np.linalg.norm(aa, axis=-1)  # (...,)
    # sin(t)/t and (1-cos(t))/t^2 with stable small-angle branches
    small = theta < SMALL_ANGLE
    t2 = theta * theta
    with np.errstate(invalid="ignore", divide="ignore"):
        a = np.where(small, 1.0 - t2 / 6.0, np.sin(theta) / np.where(small, 1.0, theta))
        b = np.where(small, 0.5 - t2 / 24.0, (1.0 - np.cos(theta)) / np.where(small, 1.0, t2))

    x, y, z = aa[..., 0], aa[..., 1], aa[..., 2]
    zero = np.zeros_like(x)
    # K = skew(axis_angle), unnormalized
    K = np.stack(
        [
            np.stack([zero, -z, y], axis=-1),
            np.stack([z, zero, -x], axis=-1),
            np.stack([-y, x, zero], axis=-1),
        ],
        axis=-2,
    )
    eye = np.broadcast_to(np.eye(3), K.shape)
    R = eye + a[..., None, None] * K + b[..., None, None] * (K @ K)
    return R[0] if squeeze else R


def matrix_to_axis_angle(matrix: np.ndarray) -> np.ndarray:
    """Convert a rotation matrix (3, 3) to its axis-angle vector (3,)."""
    return quat_to_axis_angle(quat_from_matrix(np.asarray(matrix, dtype=np.float64)))


def quat_from_axis_angle(axis_angle: np.ndarray) -> np.ndarray:
    """Axis-angle (..., 3) to unit quaternion (..., 4), scalar first."""
    aa = np.asarray(axis_angle, dtype=np.float64)
    theta = np.linalg.norm(aa, axis=-1, keepdims=True)
    half = 0.5 * theta
    small = theta < SMALL_ANGLE
    # sin(t/2)/t -> 1/2 - t^2/48 as t -> 0
    k = np.where(small, 0.5 - theta * theta / 48.0, np.sin(half) / np.where(small, 1.0, theta))
    return np.concatenate([np.cos(half), aa * k], axis=-1)


def quat_to_axis_angle(quat: np.ndarray) -> np.ndarray:
    """Unit quaternion (4,) scalar-first to axis-angle (3,) with angle in [0, pi]."""
    q = np.asarray(quat, dtype=np.float64)
    q = q / np.linalg.norm(q)
    if q[0] < 0.0:
        q = -q
    w = min(1.0, max(-1.0, q[0]))
    angle = 2.0 * np.arccos(w)
    s = np.sqrt(max(0.0, 1.0 - w * w))
    if s < SMALL_ANGLE:
        return 2.0 * q[1:]  # small angle: q_vec ~ axis * angle / 2
    return q[1:] / s * angle


def quat_from_matrix(matrix: np.ndarray) -> np.ndarray:
    """Rotation matrix (3, 3) to unit quaternion (4,), scalar first."""
    m = np.asarray(matrix, dtype=np.float64)
    t = np.trace(m)
    if t > 0.0:
        s = np.sqrt(t + 1.0) * 2.0
        return np.array(
            [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
        )
    i = int(np.argmax(np.diag(m)))
    if i == 0:
        s = np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        q = [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s]
    elif i == 1:
        s = np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        q = [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s]
    else:
        s = np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        q = [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s]
    q = np.asarray(q)
    return q / np.linalg.norm(q)


def slerp(q0: np.ndarray, q1: np.ndarray, t: float) -> np.ndarray:
    """Spherical interpolation between unit quaternions along the shorter arc."""
    q0 = np.asarray(q0, dtype=np.float64)
    q1 = np.asarray(q1, dtype=np.float64)
    dot = float(np.dot(q0, q1))
    if dot < 0.0:
        q1 = -q1
        dot = -dot
    if dot > 1.0 - 1e-12:
        out = q0 + t * (q1 - q0)
        return out / np.linalg.norm(out)
    omega = np.arccos(min(1.0, dot))
    so = np.sin(omega)
    out = (np.sin((1.0 - t) * omega) / so) * q0 + (np.sin(t * omega) / so) * q1
    return out / np.linalg.norm(out)


def slerp_axis_angle(a: np.ndarray, b: np.ndarray, t: float) -> np.ndarray:
    """Slerp two axis-angle vectors, returning an axis-angle vector."""
    return quat_to_axis_angle(slerp(quat_from_axis_angle(a), quat_from_axis_angle(b), t))


def is_rotation(matrix: np.ndarray, tol: float = 1e-9) -> bool:
    """True if `matrix` is orthonormal with det +1 within `tol`."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.shape != (3, 3):
        return False
    return (
        np.abs(m @ m.T - np.eye(3)).max() <= tol
        and abs(float(np.linalg.det(m)) - 1.0) <= tol
    )
