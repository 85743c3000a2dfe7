"""End-to-end orchestration of the editing pipeline.

Order of stages: optional clip substitution, hand merging (on the source
orientation, since wrist locals survive the later re-orientation), 2D
trajectory interpolation, unprojection to the ground-aware world frame,
speed alignment, heading derivation, parametric re-seating of every frame,
and foot grounding.

The Eq.-style vertex transform is rigid per frame, and rigid maps commute
with linear blend skinning, so the edit exports exactly as new global
orientation + translation parameters; body pose, hand pose and shape pass
through untouched.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bank import MotionClip, loop_clip
from .body import BodyModelAsset, joint_positions, skin_vertices
from .config import EditConfig
from .errors import ValidationError
from .hands import merge_hands
from .ingest import EstimatorBundle, derive_camera_registration
from .io_formats import read_pfm
from .motion import MotionSequence
from .render import default_vertex_colors, render_sequence
from .rotations import axis_angle_to_matrix, matrix_to_axis_angle
from .trajectory import (
    DepthSample,
    Keypoint,
    Trajectory2D,
    Trajectory3D,
    align_speed,
    body_yaw,
    camera_to_world,
    cumulative_arc_length,
    derive_headings,
    ground_intersect,
    ground_shifts,
    heading_rotation,
    interpolate_keypoints,
    unproject_point,
)
from .worldframe import CameraModel, WorldFrame, build_world_frame


@dataclass(frozen=True)
class EditResult:
    sequence: MotionSequence  # edited motion, world frame
    report: dict  # deterministic, JSON-ready
    trajectory2d: np.ndarray  # (N, 2) px
    trajectory3d: Trajectory3D  # aligned world path + headings
    world_frame: WorldFrame
    camera: CameraModel  # registered camera used for the edit


def scene_world_frame(bundle: EstimatorBundle, cam: CameraModel) -> WorldFrame:
    """Ground-aware frame for the scene: origin at the first-frame stance point."""
    root0 = bundle.body_sequence.frames[0].translation
    stance = np.array([root0[0], 0.0, root0[2]])
    return build_world_frame(stance, np.array([0.0, -1.0, 0.0]), cam.view_dir_world())


def unproject_trajectory(
    points2d: np.ndarray,
    cam: CameraModel,
    frame: WorldFrame,
    depth_files: tuple[Path, ...] | None = None,
    depth_focal: float | None = None,
) -> tuple[np.ndarray, str]:
    """Per-frame pixels to world points.

    Uses metric depth maps when the bundle ships them (calibrated by f2/f1),
    else falls back to ground-plane intersection. Returns (points (N, 3), route).
    """
    n = len(points2d)
    out = np.empty((n, 3))
    if depth_files:
        if len(depth_files) != n:
            raise ValidationError(f"{len(depth_files)} depth maps for {n} frames")
        for i, (p, path) in enumerate(zip(points2d, depth_files)):
            depth_map = read_pfm(path)
            h, w = depth_map.shape
            px = min(int(p[0] * w / cam.width), w - 1)
            py = min(int(p[1] * h / cam.height), h - 1)
            sample = DepthSample(d=float(depth_map[py, px]), f2=float(depth_focal))
            out[i] = camera_to_world(unproject_point(p, cam, sample), cam)
        return out, "depth"
    for i, p in enumerate(points2d):
        out[i] = ground_intersect(p, cam, frame)
    return out, "ground"


def _reseat_frames(
    seq: MotionSequence,
    asset: BodyModelAsset,
    new_path: np.ndarray,
    heading_rots: np.ndarray,
    yaw_only: bool,
) -> MotionSequence:
    """Replace global orientation and translation per frame (the rigid re-seat).

    The pivot is the original root joint position; the target keeps the
    original root height over the edited ground point, so gait bounce
    survives and grounding only removes estimation error.
    """
    from dataclasses import replace

    root_rest = asset.joint_rest_positions[asset.root_joint]
    frames = []
    for n, pose in enumerate(seq.frames):
        R_phi = axis_angle_to_matrix(pose.global_orientation)
        undo = heading_rotation(body_yaw(pose.global_orientation)) if yaw_only else R_phi
        R_new = heading_rots[n] @ undo.T @ R_phi
        root_old = pose.translation + root_rest
        target = np.array([new_path[n, 0], root_old[1], new_path[n, 2]])
        frames.append(
            replace(
                pose,
                translation=target - root_rest,
                global_orientation=matrix_to_axis_angle(R_new),
            )
        )
    return seq.with_frames(frames)


def edit_motion(
    bundle: EstimatorBundle,
    asset: BodyModelAsset,
    keypoints: tuple[Keypoint, ...],
    config: EditConfig,
    clip: MotionClip | None = None,
    n_frames: int | None = None,
    blend_window: int = 4,
) -> EditResult:
    """Run the full editing pipeline on one scene."""
    bundle, residual = derive_camera_registration(bundle)
    cam = bundle.camera
    frame = scene_world_frame(bundle, cam)

    report: dict = {"registration_residual_m": residual}

    # action source: the scene's own motion, or a bank clip looped to length
    if clip is not None:
        n = n_frames if n_frames is not None else bundle.frame_count
        source = loop_clip(clip, n, blend_window)
        report["clip"] = {"id": clip.id, "frames": n, "blend_window": blend_window}
        hands_note = "skipped: clip substitution replaces the estimated body"
    else:
        source = bundle.body_sequence
        n = source.frame_count
        if n_frames is not None and n_frames != n:
            source = loop_clip(
                MotionClip(id="scene", tags=(), sequence=source), n_frames, blend_window
            )
            n = n_frames
        if bundle.hands is not None and len(bundle.hands) == n:
            source = merge_hands(
                source, bundle.hands, asset, cam, config.hand_confidence_threshold
            )
            hands_note = "merged"
        else:
            hands_note = "none present" if bundle.hands is None else "skipped: frame count mismatch"
    report["hands"] = hands_note

    traj2d = Trajectory2D(keypoints=keypoints)
    traj2d.validate_bounds(cam.width, cam.height)
    points2d = interpolate_keypoints(keypoints, n)

    edited_points, route = unproject_trajectory(
        points2d, cam, frame, bundle.depth_files, bundle.depth_focal
    )
    report["unprojection_route"] = route

    # pacing is compared on the ground plane: the drawn path lives at y = 0,
    # so the original profile drops its vertical bob as well
    original_ground = source.translations()
    original_ground[:, 1] = 0.0
    original_arc = cumulative_arc_length(original_ground, config.arc_norm)
    aligned = align_speed(edited_points, original_arc, config.arc_norm, config.rescale_arc)
    edited_arc = cumulative_arc_length(aligned, config.arc_norm)
    drawn_total = float(cumulative_arc_length(edited_points, config.arc_norm)[-1])
    report["arc"] = {
        "norm": config.arc_norm,
        "original_total_m": float(original_arc[-1]),
        "drawn_total_m": drawn_total,
        "rescale_factor": (
            drawn_total / float(original_arc[-1]) if original_arc[-1] > 0 else 0.0
        ),
        "rescaled": config.rescale_arc,
    }

    psi, rots = derive_headings(
        aligned, config.heading_smooth_window, config.heading_eps
    )
    if config.alignment_yaw:
        psi = psi + config.alignment_yaw
        rots = heading_rotation(psi)
    steps = np.hypot(np.diff(aligned[:, 0]), np.diff(aligned[:, 2]))
    degenerate = [int(i) + 1 for i in np.flatnonzero(steps < config.heading_eps)]
    report["degenerate_frames"] = degenerate

    edited = _reseat_frames(source, asset, aligned, rots, config.yaw_only)

    mesh = np.stack([skin_vertices(asset, f).vertices for f in edited.frames])
    shifts = ground_shifts(mesh, config.foot_window, asset.foot_vertex_ids)
    grounded = edited.with_frames(
        pose.with_translation(pose.translation - [0.0, shift, 0.0])
        for pose, shift in zip(edited.frames, shifts)
    )
    report["foot_shift_m"] = {
        "max": float(np.abs(shifts).max()),
        "mean": float(np.abs(shifts).mean()),
    }
    report["frames"] = n
    report["config"] = config.to_dict()

    traj3d = Trajectory3D(
        positions=aligned, cumulative_arc=edited_arc, headings=psi, heading_rotations=rots
    )
    return EditResult(
        sequence=grounded,
        report=report,
        trajectory2d=points2d,
        trajectory3d=traj3d,
        world_frame=frame,
        camera=cam,
    )


def hand_submesh_ids(asset: BodyModelAsset) -> dict[str, np.ndarray]:
    """Vertex subsets for the two hands, from the skinning weights."""
    out = {}
    for side, wrist in zip(("left", "right"), asset.hand_joint_ids):
        subtree = asset.joint_subtree(int(wrist))
        out[side] = asset.vertices_for_joints(subtree)
    return out


def render_motion(
    seq: MotionSequence,
    asset: BodyModelAsset,
    cameras: CameraModel | list[CameraModel],
    resolution: tuple[int, int],
    out_dir: str | Path,
    config: EditConfig | None = None,
) -> dict:
    """Skin every frame and render the five guidance-map types."""
    config = config or EditConfig()
    mesh_frames = [skin_vertices(asset, f).vertices for f in seq.frames]
    colors = (
        asset.semantic_vertex_colors
        if asset.semantic_vertex_colors is not None
        else default_vertex_colors(asset.template_vertices)
    )
    return render_sequence(
        mesh_frames,
        asset.faces,
        colors,
        cameras,
        resolution,
        out_dir,
        near=config.near_plane,
        hand_vertex_ids=hand_submesh_ids(asset),
        occlusion_delta=config.occlusion_delta,
        workers=config.resolved_workers(),
    )


def project_root_path(result: EditResult) -> np.ndarray:
    """Edited ground-path points projected back into the image (N, 2) px."""
    from .render import project_vertices

    uv, _, _ = project_vertices(result.trajectory3d.positions, result.camera)
    return uv


def skeleton_polylines(
    asset: BodyModelAsset, seq: MotionSequence, cam: CameraModel, frames: list[int]
) -> dict[int, list[list[list[float]]]]:
    """2D bone segments per requested frame for UI overlays."""
    out = {}
    for n in frames:
        pose = seq.frames[n]
        joints = joint_positions(asset, pose)
        from .render import project_vertices

        uv, _, ok = project_vertices(joints, cam)
        segments = []
        for j in range(asset.joint_count):
            p = int(asset.joint_parents[j])
            if p >= 0 and ok[j] and ok[p]:
                segments.append([[float(uv[p, 0]), float(uv[p, 1])],
                                 [float(uv[j, 0]), float(uv[j, 1])]])
        out[n] = segments
    return out
