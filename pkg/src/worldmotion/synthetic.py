"""Synthetic desk-scale scenes: walking mannequin, analytic camera, bundles.

Everything here is deterministic. These generators drive the test suite,
the demo scripts and the acceptance checks; no captured data is required.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .body import BodyModelAsset, FramePose, joint_positions, skin_vertices
from .ingest import write_bundle
from .motion import MotionSequence
from .trajectory import ground_feet
from .worldframe import CameraModel

GAIT_PERIOD = 24  # frames per gait cycle


def walk_pose(asset: BodyModelAsset, phase: float, x: float) -> FramePose:
    """One walking frame: root at `x` along +x, limbs at gait `phase` (radians)."""
    names = list(asset.joint_names)
    body = np.zeros((asset.body_joint_count, 3))
    rows = {int(j): r for r, j in enumerate(asset.body_joint_ids)}

    def set_rot(joint_name, axis, angle):
        j = names.index(joint_name)
        body[rows[j], axis] = angle

    swing = 0.5 * np.sin(phase)
    # legs swing about z (forward/back in the x-y plane); knees flex on the back swing
    set_rot("left_hip", 2, swing)
    set_rot("right_hip", 2, -swing)
    set_rot("left_knee", 2, -0.3 * (1.0 - np.cos(phase)) / 2.0)
    set_rot("right_knee", 2, -0.3 * (1.0 + np.cos(phase)) / 2.0)
    # arms counter-swing
    set_rot("left_shoulder", 2, -0.35 * np.sin(phase))
    set_rot("right_shoulder", 2, 0.35 * np.sin(phase))

    bob = 0.02 * np.cos(2.0 * phase)
    return FramePose(
        translation=np.array([x, bob, 0.0]),
        global_orientation=np.zeros(3),
        body_pose=body,
        shape=np.zeros(asset.shape_count),
        hand_pose=np.zeros((2, 15, 3)),
    )


def make_walk_sequence(
    asset: BodyModelAsset,
    n_frames: int = 48,
    fps: float = 24.0,
    speed: float = 1.2,
    speed_wobble: float = 0.0,
    grounded: bool = True,
) -> MotionSequence:
    """Mannequin walking straight along +x, facing +x.

    `speed_wobble` in [0, 1) modulates the per-frame step length sinusoidally
    so the speed profile is non-uniform. With `grounded`, every frame is
    shifted so its lowest foot vertex touches y = 0 exactly.
    """
    step = speed / fps
    xs = np.zeros(n_frames)
    for n in range(1, n_frames):
        mod = 1.0 + speed_wobble * np.sin(2.0 * np.pi * n / 17.0)
        xs[n] = xs[n - 1] + step * mod
    frames = [walk_pose(asset, 2.0 * np.pi * n / GAIT_PERIOD, xs[n]) for n in range(n_frames)]

    if grounded:
        foot = asset.foot_vertex_ids
        adjusted = []
        for pose in frames:
            verts = skin_vertices(asset, pose).vertices
            low = verts[foot, 1].min() if foot is not None and len(foot) else verts[:, 1].min()
            adjusted.append(pose.with_translation(pose.translation - [0.0, low, 0.0]))
        frames = adjusted
    return MotionSequence(fps=fps, frames=tuple(frames))


def make_scene_camera(
    width: int = 640,
    height: int = 480,
    focal: float = 600.0,
    center: np.ndarray | None = None,
    look_at: np.ndarray | None = None,
) -> CameraModel:
    """Analytic camera placed at `center` looking at `look_at` (world, y up)."""
    center = np.array([0.0, 1.6, -4.0]) if center is None else np.asarray(center, dtype=np.float64)
    look_at = np.array([1.5, 0.8, 0.0]) if look_at is None else np.asarray(look_at, dtype=np.float64)
    fwd = look_at - center
    fwd = fwd / np.linalg.norm(fwd)
    # camera y (image down) is world-down made orthogonal to the view direction;
    # camera x = y cross z keeps the basis right-handed (det +1)
    down = np.array([0.0, -1.0, 0.0]) - np.dot(np.array([0.0, -1.0, 0.0]), fwd) * fwd
    norm = np.linalg.norm(down)
    if norm < 1e-9:
        raise ValueError("camera cannot look straight up or down the gravity axis")
    down /= norm
    x_axis = np.cross(down, fwd)
    R_c2w = np.stack([x_axis, down, fwd], axis=1)  # columns = camera axes in world
    R_w2c = R_c2w  # row-convention storage equals the column c2w matrix
    T_w2c = -center @ R_w2c
    K = np.array([[focal, 0.0, width / 2.0], [0.0, focal, height / 2.0], [0.0, 0.0, 1.0]])
    return CameraModel(K=K, f1=focal, R_w2c=R_w2c, T_w2c=T_w2c, width=width, height=height)


def sequence_joint_tracks(
    asset: BodyModelAsset, seq: MotionSequence, cam: CameraModel
) -> tuple[np.ndarray, np.ndarray]:
    """Per-frame joint positions in world and camera space (N, J, 3)."""
    from .trajectory import world_to_camera

    world = np.stack([joint_positions(asset, f) for f in seq.frames])
    camera = world_to_camera(world.reshape(-1, 3), cam).reshape(world.shape)
    return world, camera


def make_bundle_dir(
    path: str | Path,
    asset: BodyModelAsset,
    n_frames: int = 48,
    speed_wobble: float = 0.3,
    camera: CameraModel | None = None,
) -> Path:
    """Write a complete estimator bundle for a synthetic walking scene."""
    path = Path(path)
    cam = camera if camera is not None else make_scene_camera()
    seq = make_walk_sequence(asset, n_frames=n_frames, speed_wobble=speed_wobble)
    joints_world, joints_cam = sequence_joint_tracks(asset, seq, cam)
    write_bundle(path, seq, joints_world, joints_cam, cam)
    return path


def grounded_mesh_frames(asset: BodyModelAsset, seq: MotionSequence, window: int = 5) -> np.ndarray:
    """Skinned frames (N, V, 3) after foot grounding."""
    frames = np.stack([skin_vertices(asset, f).vertices for f in seq.frames])
    return ground_feet(frames, window=window, foot_vertex_ids=asset.foot_vertex_ids)
