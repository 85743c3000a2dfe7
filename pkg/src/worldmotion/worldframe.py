"""Ground-aware world coordinate frame and rigid camera registration.

The world frame is gravity-aligned and metric: +y is up, the ground plane is
y = 0, and one unit is one meter. Camera extrinsics use the row-vector
convention throughout the repo: ``p_cam = p_world @ R_w2c + T_w2c``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateGeometryError, ValidationError

AXIS_TOL = 1e-9
PARALLEL_TOL = 1e-3  # rad


@dataclass(frozen=True)
class WorldFrame:
    """Right-handed, gravity-aligned metric frame anchored at the first stance point."""

    origin: np.ndarray  # (3,) m, first-frame stance point
    axis_x: np.ndarray  # unit
    axis_y: np.ndarray  # unit, up (anti-gravity)
    axis_z: np.ndarray  # unit
    scale: float = 1.0  # meters per unit
    alignment_yaw: float = 0.0  # rad, mesh rotation between two ground-aligned frames
    ground_height: float = 0.0  # m

    def __post_init__(self):
        axes = np.stack([self.axis_x, self.axis_y, self.axis_z])
        if np.abs(np.linalg.norm(axes, axis=1) - 1.0).max() > 1e-9:
            raise ValidationError("world-frame axes must be unit length")
        gram = axes @ axes.T
        if np.abs(gram - np.eye(3)).max() > 1e-9:
            raise ValidationError("world-frame axes must be mutually orthogonal")
        if np.dot(np.cross(self.axis_x, self.axis_y), self.axis_z) < 0.0:
            raise ValidationError("world-frame axes must be right-handed (x cross y = z)")
        if self.scale <= 0.0:
            raise ValidationError("world-frame scale must be positive")


def build_world_frame(
    stance_point: np.ndarray,
    gravity_dir: np.ndarray,
    camera_view_dir: np.ndarray,
) -> WorldFrame:
    """Construct the world frame from gravity and the camera view direction.

    y = -gravity (up); x = normalize(y cross view); z = x cross y, which is
    the horizontal projection of the view direction. Errors out when the view
    direction is parallel to gravity.
    """
    gravity = np.asarray(gravity_dir, dtype=np.float64)
    view = np.asarray(camera_view_dir, dtype=np.float64)
    for name, vec in (("gravity_dir", gravity), ("camera_view_dir", view)):
        if abs(np.linalg.norm(vec) - 1.0) > 1e-6:
            raise ValidationError(f"{name} must be a unit vector")

    y = -gravity
    cross = np.cross(y, view)
    sin_angle = np.linalg.norm(cross)
    if sin_angle < PARALLEL_TOL:
        raise DegenerateGeometryError("camera view direction is parallel to gravity")
    x = cross / sin_angle
    z = np.cross(x, y)
    # With z := x cross y the triple is right-handed by construction; the
    # assertion in WorldFrame guards against numerical surprises.
    return WorldFrame(
        origin=np.asarray(stance_point, dtype=np.float64),
        axis_x=x,
        axis_y=y / np.linalg.norm(y),
        axis_z=z / np.linalg.norm(z),
    )


def estimate_rigid_transform(
    src: np.ndarray, dst: np.ndarray, with_scale: bool = False
) -> tuple[np.ndarray, np.ndarray, float]:
    """Least-squares rigid (optionally similarity) alignment of paired points.

    Returns (R, t, scale) minimizing sum ||dst_i - (scale * R @ src_i + t)||^2
    with R a proper rotation (reflections suppressed). Column-vector
    convention for R; apply to row arrays as ``src @ (scale * R).T + t``.

    Raises DegenerateGeometryError when the centered covariance has rank < 2
    (all points collinear or coincident).
    """
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    if src.shape != dst.shape or src.ndim != 2 or src.shape[1] != 3:
        raise ValidationError(f"point sets must both be (M, 3); got {src.shape} and {dst.shape}")
    m = src.shape[0]
    if m < 3:
        raise ValidationError("rigid registration needs at least 3 points")

    mu_src = src.mean(axis=0)
    mu_dst = dst.mean(axis=0)
    src_c = src - mu_src
    dst_c = dst - mu_dst
    cov = dst_c.T @ src_c / m
    U, D, Vt = np.linalg.svd(cov)
    if np.count_nonzero(D > 1e-12 * max(D[0], 1e-300)) < 2:
        raise DegenerateGeometryError("degenerate point configuration (rank < 2)")
    S = np.eye(3)
    if np.linalg.det(U) * np.linalg.det(Vt) < 0.0:
        S[2, 2] = -1.0
    R = U @ S @ Vt
    if with_scale:
        var_src = (src_c ** 2).sum() / m
        scale = float(np.trace(np.diag(D) @ S) / var_src)
    else:
        scale = 1.0
    t = mu_dst - scale * R @ mu_src
    return R, t, scale


def ground_align_yaw(frame_a: WorldFrame, frame_b: WorldFrame) -> float:
    """Yaw about the shared up axis taking frame_a's z axis to frame_b's z axis."""
    y_a, y_b = frame_a.axis_y, frame_b.axis_y
    if np.arccos(np.clip(np.dot(y_a, y_b), -1.0, 1.0)) > PARALLEL_TOL:
        raise ValidationError("frames do not share an up axis; ground alignment undefined")
    za = frame_a.axis_z - np.dot(frame_a.axis_z, y_a) * y_a
    zb = frame_b.axis_z - np.dot(frame_b.axis_z, y_a) * y_a
    za /= np.linalg.norm(za)
    zb /= np.linalg.norm(zb)
    return float(np.arctan2(np.dot(np.cross(za, zb), y_a), np.dot(za, zb)))


# ---------------------------------------------------------------------------
# Camera model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CameraModel:
    """Pinhole camera with metric extrinsics.

    `R_w2c`/`T_w2c` map row-vector world points into camera space:
    ``p_cam = p_world @ R_w2c + T_w2c``. The camera looks along +z in its
    own space. `f1` is the focal length the upstream pose estimator assumed;
    it calibrates metric depth from a second estimator (see unprojection).
    """

    K: np.ndarray  # (3, 3) intrinsics, pixels
    f1: float  # predicted focal, pixels
    R_w2c: np.ndarray  # (3, 3)
    T_w2c: np.ndarray  # (3,)
    width: int
    height: int

    def __post_init__(self):
        K = self.K
        if K.shape != (3, 3):
            raise ValidationError("K must be 3x3")
        lower = np.tril(K, -1)
        if np.abs(lower).max() > 0.0:
            raise ValidationError("K must be upper-triangular")
        if K[0, 0] <= 0 or K[1, 1] <= 0 or abs(K[2, 2] - 1.0) > 1e-12:
            raise ValidationError("K must have positive focal entries and K[2][2] = 1")
        R = self.R_w2c
        if np.abs(R @ R.T - np.eye(3)).max() > 1e-6 or np.linalg.det(R) < 0:
            raise ValidationError("R_w2c must be orthonormal with det +1")
        if self.f1 <= 0:
            raise ValidationError("f1 must be positive")
        if self.width <= 0 or self.height <= 0:
            raise ValidationError("image size must be positive")

    @property
    def principal_point(self) -> np.ndarray:
        return np.array([self.K[0, 2], self.K[1, 2]])

    def rotation_c2w_cols(self) -> np.ndarray:
        """Camera-to-world rotation in column convention (``x_w = R @ x_c``).

        Because `R_w2c` is stored row-convention, this is the stored matrix
        itself: ``x_c(row) = x_w(row) @ R_w2c  <=>  x_w(col) = R_w2c @ x_c(col)``.
        """
        return self.R_w2c

    def rotation_w2c_cols(self) -> np.ndarray:
        """World-to-camera rotation in column convention."""
        return self.R_w2c.T

    def center_world(self) -> np.ndarray:
        """Camera center expressed in world coordinates."""
        return -self.T_w2c @ self.R_w2c.T

    def view_dir_world(self) -> np.ndarray:
        """Unit world-space direction of the camera's +z (viewing) axis."""
        d = np.array([0.0, 0.0, 1.0]) @ self.R_w2c.T
        return d / np.linalg.norm(d)


def camera_to_json_dict(cam: CameraModel) -> dict:
    return {
        "K": [float(x) for x in cam.K.reshape(-1)],
        "f1": float(cam.f1),
        "R_w2c": [float(x) for x in cam.R_w2c.reshape(-1)],
        "T_w2c": [float(x) for x in cam.T_w2c],
        "width": int(cam.width),
        "height": int(cam.height),
    }


def camera_from_json_dict(doc: dict, source: str = "camera") -> CameraModel:
    try:
        return CameraModel(
            K=np.asarray(doc["K"], dtype=np.float64).reshape(3, 3),
            f1=float(doc["f1"]),
            R_w2c=np.asarray(doc["R_w2c"], dtype=np.float64).reshape(3, 3),
            T_w2c=np.asarray(doc["T_w2c"], dtype=np.float64).reshape(3),
            width=int(doc["width"]),
            height=int(doc["height"]),
        )
    except KeyError as exc:
        raise ValidationError(f"{source}: missing camera field {exc.args[0]!r}") from exc


def save_camera(path: str | Path, cam: CameraModel) -> None:
    Path(path).write_text(json.dumps(camera_to_json_dict(cam), indent=2, sort_keys=True))


def load_camera(path: str | Path) -> CameraModel:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid camera JSON: {exc}") from exc
    return camera_from_json_dict(doc, source=str(path))
