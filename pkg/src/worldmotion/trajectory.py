"""Trajectory editing: 2D keypoints to world-space 3D paths.

Pipeline pieces: piecewise-linear keypoint interpolation, calibrated
unprojection, camera/world transforms, cumulative arc length, speed
alignment of the edited path to the original pacing, ground-plane heading
derivation, rigid vertex retargeting, and sliding-window foot grounding.

Points are row vectors; camera extrinsics apply as
``p_cam = p_world @ R_w2c + T_w2c``. Rotation matrices use the column
convention, so rotating row points by R is ``pts @ R.T`` and undoing it is
``pts @ R``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DegenerateGeometryError, ValidationError
from .rotations import axis_angle_to_matrix
from .worldframe import CameraModel, WorldFrame

# Displacements below this (meters) keep the previous heading.
HEADING_EPS = 1e-5
L1 = "l1"
L2 = "l2"


@dataclass(frozen=True)
class Keypoint:
    """One user-placed trajectory point, optionally pinned to a frame."""

    u: float
    v: float
    frame: int | None = None


@dataclass(frozen=True)
class Trajectory2D:
    """User keypoints plus (optionally) the interpolated per-frame pixels."""

    keypoints: tuple[Keypoint, ...]
    per_frame_points: np.ndarray | None = None  # (N, 2) px

    def validate_bounds(self, width: int, height: int) -> None:
        for i, kp in enumerate(self.keypoints):
            if not (0 <= kp.u < width and 0 <= kp.v < height):
                raise ValidationError(
                    f"keypoint {i} at ({kp.u}, {kp.v}) outside image {width}x{height}"
                )
        frames = [kp.frame for kp in self.keypoints if kp.frame is not None]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValidationError("keypoint frame indices must be strictly increasing")


@dataclass(frozen=True)
class Trajectory3D:
    """World-space path with its speed profile and per-frame headings."""

    positions: np.ndarray  # (N, 3) m
    cumulative_arc: np.ndarray  # (N,) m, non-decreasing from 0
    headings: np.ndarray  # (N,) rad
    heading_rotations: np.ndarray  # (N, 3, 3)

    def __post_init__(self):
        arc = self.cumulative_arc
        if arc[0] != 0.0 or (np.diff(arc) < -1e-12).any():
            raise ValidationError("cumulative arc must be non-decreasing and start at 0")


@dataclass(frozen=True)
class DepthSample:
    """Metric depth at a pixel plus the focal length of the depth estimator."""

    d: float  # meters
    f2: float  # pixels

    def __post_init__(self):
        if self.d <= 0:
            raise ValidationError("depth must be positive")
        if self.f2 <= 0:
            raise ValidationError("depth-estimator focal must be positive")


# ---------------------------------------------------------------------------
# keypoints
# ---------------------------------------------------------------------------

def load_keypoints(path: str | Path) -> tuple[Keypoint, ...]:
    """Read a trajectory keypoint file: JSON list of {frame?, u, v}."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid keypoint JSON: {exc}") from exc
    if not isinstance(doc, list):
        raise ValidationError(f"{path}: keypoint file must be a JSON list")
    out = []
    for i, item in enumerate(doc):
        try:
            out.append(
                Keypoint(
                    u=float(item["u"]),
                    v=float(item["v"]),
                    frame=int(item["frame"]) if "frame" in item and item["frame"] is not None else None,
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"{path}: bad keypoint at index {i}: {exc}") from exc
    return tuple(out)


def save_keypoints(path: str | Path, keypoints: Sequence[Keypoint]) -> None:
    doc = []
    for kp in keypoints:
        item = {"u": float(kp.u), "v": float(kp.v)}
        if kp.frame is not None:
            item["frame"] = int(kp.frame)
        doc.append(item)
    Path(path).write_text(json.dumps(doc))


def interpolate_keypoints(keypoints: Sequence[Keypoint], n_frames: int) -> np.ndarray:
    """Piecewise-linear per-frame pixels (N, 2) through the keypoints.

    Keypoints either all carry frame indices (strictly increasing, first 0,
    last N-1 after clamping to the valid range) or none do, in which case
    they are spaced uniformly over [0, N-1].
    """
    if len(keypoints) < 2:
        raise ValidationError("need at least 2 keypoints to interpolate a trajectory")
    if n_frames < 2:
        raise ValidationError("need at least 2 frames")
    with_frames = [kp.frame is not None for kp in keypoints]
    if any(with_frames) and not all(with_frames):
        raise ValidationError("keypoints must either all have frame indices or none")
    if all(with_frames):
        knots = np.array([kp.frame for kp in keypoints], dtype=np.float64)
        if (np.diff(knots) <= 0).any():
            raise ValidationError("keypoint frame indices must be strictly increasing")
        if knots[0] < 0 or knots[-1] > n_frames - 1:
            raise ValidationError(
                f"keypoint frames must lie in [0, {n_frames - 1}]"
            )
    else:
        knots = np.linspace(0.0, n_frames - 1, len(keypoints))
    uv = np.array([[kp.u, kp.v] for kp in keypoints], dtype=np.float64)
    t = np.arange(n_frames, dtype=np.float64)
    out = np.empty((n_frames, 2))
    out[:, 0] = np.interp(t, knots, uv[:, 0])
    out[:, 1] = np.interp(t, knots, uv[:, 1])
    return out


# ---------------------------------------------------------------------------
# unprojection and space transforms
# ---------------------------------------------------------------------------

def unproject_point(p: np.ndarray, cam: CameraModel, depth: DepthSample) -> np.ndarray:
    """Lift a pixel to camera space with focal calibration.

    result = K^-1 (u, v, 1) * d * f2 / f1, where f1 is the pose estimator's
    assumed focal and f2 the depth estimator's. The ratio rescales metric
    depth so the two estimators agree.
    """
    p = np.asarray(p, dtype=np.float64).reshape(2)
    K = cam.K
    det = np.linalg.det(K)
    if abs(det) < 1e-12:
        raise DegenerateGeometryError("camera intrinsics are not invertible")
    homo = np.array([p[0], p[1], 1.0])
    ray = np.linalg.solve(K, homo)
    return ray * (depth.d * depth.f2 / cam.f1)


def camera_to_world(points: np.ndarray, cam: CameraModel) -> np.ndarray:
    """Camera-space points to world space: (p - T_w2c) @ R_w2c^-1."""
    pts = np.asarray(points, dtype=np.float64)
    return (pts - cam.T_w2c) @ cam.R_w2c.T


def world_to_camera(points: np.ndarray, cam: CameraModel) -> np.ndarray:
    """Exact inverse of :func:`camera_to_world`."""
    pts = np.asarray(points, dtype=np.float64)
    return pts @ cam.R_w2c + cam.T_w2c


def ground_intersect(p: np.ndarray, cam: CameraModel, frame: WorldFrame) -> np.ndarray:
    """World point where the pixel's back-projected ray meets the ground plane.

    Needs no depth map; valid because the subject moves on the ground.
    """
    p = np.asarray(p, dtype=np.float64).reshape(2)
    ray_cam = np.linalg.solve(cam.K, np.array([p[0], p[1], 1.0]))
    ray_world = ray_cam @ cam.R_w2c.T  # direction: rotation only
    origin = cam.center_world()
    dy = ray_world[1]
    if abs(dy) < 1e-12:
        raise DegenerateGeometryError("camera ray is parallel to the ground plane")
    t = (frame.ground_height - origin[1]) / dy
    if t <= 0:
        raise DegenerateGeometryError("camera ray points away from the ground plane")
    hit = origin + t * ray_world
    hit[1] = frame.ground_height  # exact plane membership
    return hit


# ---------------------------------------------------------------------------
# arc length and speed alignment
# ---------------------------------------------------------------------------

def cumulative_arc_length(points: np.ndarray, norm: str = L1) -> np.ndarray:
    """Running sum of per-frame displacement norms; arc[0] = 0."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValidationError(f"points must be (N, 3), got {pts.shape}")
    steps = np.diff(pts, axis=0)
    if norm == L1:
        d = np.abs(steps).sum(axis=1)
    elif norm == L2:
        d = np.linalg.norm(steps, axis=1)
    else:
        raise ValidationError(f"unknown norm {norm!r}; use 'l1' or 'l2'")
    out = np.zeros(pts.shape[0])
    np.cumsum(d, out=out[1:])
    return out


def align_speed(
    edited_positions: np.ndarray,
    original_arc: np.ndarray,
    norm: str = L1,
    rescale: bool = True,
) -> np.ndarray:
    """Reparameterize the edited path so its pacing matches the original.

    Fits position against the edited path's cumulative arc (piecewise linear,
    endpoint-clamped) and evaluates at the original profile. With `rescale`
    the original profile is linearly rescaled so its total equals the edited
    path's total, traversing the whole drawn path while keeping the relative
    pacing; without it the raw profile is used and clamped.
    """
    edited = np.asarray(edited_positions, dtype=np.float64)
    orig = np.asarray(original_arc, dtype=np.float64)
    if edited.ndim != 2 or edited.shape[1] != 3:
        raise ValidationError(f"edited positions must be (N, 3), got {edited.shape}")
    if orig.shape != (edited.shape[0],):
        raise ValidationError(
            f"original arc length {orig.shape} does not match frame count {edited.shape[0]}"
        )
    if (np.diff(orig) < -1e-12).any():
        raise ValidationError("original cumulative arc must be non-decreasing")

    total_orig = float(orig[-1])
    if total_orig == 0.0:
        return np.tile(edited[0], (edited.shape[0], 1))

    arc = cumulative_arc_length(edited, norm)
    total_edit = float(arc[-1])
    if total_edit == 0.0:
        raise DegenerateGeometryError(
            "edited path has zero length but the original motion moves"
        )
    target = orig * (total_edit / total_orig) if rescale else np.clip(orig, 0.0, total_edit)

    # collapse tied arc values (static stretches) so the map stays a function
    uniq, idx = np.unique(arc, return_index=True)
    samples = edited[idx]
    out = np.empty_like(edited)
    for axis in range(3):
        out[:, axis] = np.interp(target, uniq, samples[:, axis])
    return out


def rescale_factor(edited_total: float, original_total: float) -> float:
    """Factor applied to the original arc profile during alignment."""
    if original_total == 0.0:
        return 0.0
    return edited_total / original_total


# ---------------------------------------------------------------------------
# headings
# ---------------------------------------------------------------------------

def heading_rotation(psi: float | np.ndarray) -> np.ndarray:
    """Ground-plane heading rotation; maps +x to (cos psi, 0, sin psi).

    [[cos, 0, -sin], [0, 1, 0], [sin, 0, cos]] - column convention.
    """
    psi = np.asarray(psi, dtype=np.float64)
    c, s = np.cos(psi), np.sin(psi)
    zero = np.zeros_like(psi)
    one = np.ones_like(psi)
    rows = np.stack(
        [
            np.stack([c, zero, -s], axis=-1),
            np.stack([zero, one, zero], axis=-1),
            np.stack([s, zero, c], axis=-1),
        ],
        axis=-2,
    )
    return rows


def derive_headings(
    positions: np.ndarray,
    smoothing_window: int = 9,
    eps: float = HEADING_EPS,
    initial_heading: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-frame ground-plane headings and their rotation matrices.

    The heading of frame n is the full-quadrant arctangent of the (x, z)
    displacement from frame n-1; the first frame copies the second. Frames
    moving less than `eps` hold the previous heading. Headings are unwrapped
    and box-smoothed over a centered window (clamped at the ends);
    `smoothing_window` = 1 disables smoothing.
    """
    pts = np.asarray(positions, dtype=np.float64)
    n = pts.shape[0]
    if n < 2:
        raise ValidationError("need at least 2 frames to derive headings")
    if smoothing_window < 1 or smoothing_window % 2 == 0:
        raise ValidationError("smoothing window must be an odd positive frame count")

    dx = np.diff(pts[:, 0])
    dz = np.diff(pts[:, 2])
    disp = np.hypot(dx, dz)

    psi = np.empty(n)
    moving = disp >= eps
    last = float(initial_heading)
    seen_motion = False
    for i in range(1, n):
        if moving[i - 1]:
            last = float(np.arctan2(dz[i - 1], dx[i - 1]))
            if not seen_motion:
                # backfill the leading static frames (and frame 0) with the
                # first real heading
                psi[:i] = last
                seen_motion = True
        psi[i] = last
    if not seen_motion:
        psi[:] = last

    psi = np.unwrap(psi)
    if smoothing_window > 1:
        psi = _box_smooth(psi, smoothing_window)
    return psi, heading_rotation(psi)


def _box_smooth(values: np.ndarray, window: int) -> np.ndarray:
    half = window // 2
    n = len(values)
    out = np.empty_like(values)
    csum = np.concatenate([[0.0], np.cumsum(values)])
    for i in range(n):
        lo = max(0, i - half)
        hi = min(n, i + half + 1)
        out[i] = (csum[hi] - csum[lo]) / (hi - lo)
    return out


# ---------------------------------------------------------------------------
# vertex retargeting and foot grounding
# ---------------------------------------------------------------------------

def body_yaw(global_orientation: np.ndarray) -> float:
    """Ground-plane yaw of the body's canonical +x facing under `global_orientation`."""
    R = axis_angle_to_matrix(np.asarray(global_orientation, dtype=np.float64))
    facing = R @ np.array([1.0, 0.0, 0.0])
    return float(np.arctan2(facing[2], facing[0]))


def retarget_vertices(
    vertices: np.ndarray,
    global_orientation: np.ndarray,
    original_root: np.ndarray,
    heading_rot: np.ndarray,
    new_root: np.ndarray,
    yaw_only: bool = False,
) -> np.ndarray:
    """Rigidly re-seat one frame's vertices onto the edited trajectory.

    Removes the original global orientation about `original_root`, applies the
    heading rotation, then translates to `new_root`. With `yaw_only` only the
    yaw component of the original orientation is removed, preserving lean.
    """
    verts = np.asarray(vertices, dtype=np.float64)
    undo = (
        heading_rotation(body_yaw(global_orientation))
        if yaw_only
        else axis_angle_to_matrix(np.asarray(global_orientation, dtype=np.float64))
    )
    centered = verts - np.asarray(original_root, dtype=np.float64)
    # row points: "@ undo" applies the inverse rotation, "@ R.T" applies R
    return centered @ undo @ np.asarray(heading_rot).T + np.asarray(new_root, dtype=np.float64)


def ground_shifts(
    mesh_frames: np.ndarray, window: int, foot_vertex_ids: np.ndarray | None = None
) -> np.ndarray:
    """Per-frame vertical shift: min foot height over the centered window."""
    frames = np.asarray(mesh_frames, dtype=np.float64)
    if frames.ndim != 3 or frames.shape[2] != 3:
        raise ValidationError(f"mesh frames must be (N, V, 3), got {frames.shape}")
    if frames.shape[0] == 0 or frames.shape[1] == 0:
        raise ValidationError("mesh frames are empty")
    if window < 1 or window % 2 == 0:
        raise ValidationError("grounding window must be an odd positive frame count")
    ys = frames[:, :, 1]
    if foot_vertex_ids is not None and len(foot_vertex_ids):
        ys = ys[:, np.asarray(foot_vertex_ids, dtype=np.int64)]
    frame_min = ys.min(axis=1)
    half = window // 2
    n = len(frame_min)
    shifts = np.empty(n)
    for i in range(n):
        lo = max(0, i - half)
        hi = min(n, i + half + 1)
        shifts[i] = frame_min[lo:hi].min()
    return shifts


def ground_feet(
    mesh_frames: np.ndarray, window: int, foot_vertex_ids: np.ndarray | None = None
) -> np.ndarray:
    """Shift every frame down by its windowed minimum foot height."""
    frames = np.array(mesh_frames, dtype=np.float64)
    shifts = ground_shifts(frames, window, foot_vertex_ids)
    frames[:, :, 1] -= shifts[:, None]
    return frames
