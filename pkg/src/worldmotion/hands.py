"""Merge camera-space hand estimates into the world-space body model.

A hand estimator predicts the wrist orientation in camera space. To splice it
into the body, the camera-space orientation is carried into world space and
the local wrist rotation is solved so that the body's forward-kinematic chain
reproduces it exactly:

    local_wrist = chain_parent^-1 @ (R_c2w @ hand_orientation)

where chain_parent is the chain rotation from the root down to the wrist's
parent. This is the orientation-parameter route; vertex registration between
hand and body meshes is deliberately not implemented (it can corrupt the
upstream chain when the hand pose is far from the template's).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .body import BodyModelAsset, chain_global_rotation
from .errors import LowConfidenceHand, ValidationError
from .motion import MotionSequence
from .rotations import matrix_to_axis_angle
from .worldframe import CameraModel

LEFT = "left"
RIGHT = "right"
DEFAULT_CONFIDENCE_THRESHOLD = 0.5


@dataclass(frozen=True)
class HandEstimate:
    """Camera-space wrist orientation plus finger pose for one hand."""

    side: str  # "left" | "right"
    global_orientation: np.ndarray  # (3, 3), camera space, column convention
    hand_pose: np.ndarray  # (15, 3) axis-angle
    confidence: float

    def __post_init__(self):
        if self.side not in (LEFT, RIGHT):
            raise ValidationError(f"hand side must be 'left' or 'right', got {self.side!r}")
        R = self.global_orientation
        if R.shape != (3, 3) or np.abs(R @ R.T - np.eye(3)).max() > 1e-6 or np.linalg.det(R) < 0:
            raise ValidationError("hand orientation must be orthonormal with det +1")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValidationError(f"confidence {self.confidence} outside [0, 1]")
        if self.hand_pose.shape != (15, 3):
            raise ValidationError(f"hand pose must be (15, 3), got {self.hand_pose.shape}")


def match_hand_orientation(
    hand: HandEstimate,
    cam: CameraModel,
    chain_rotation: np.ndarray,
    min_confidence: float = DEFAULT_CONFIDENCE_THRESHOLD,
) -> np.ndarray:
    """Local wrist rotation that reproduces the hand estimate in world space.

    `chain_rotation` is the body's chain rotation from the root down to the
    wrist's parent (the wrist's own local rotation excluded), so assigning the
    result as the wrist local rotation makes the full chain equal the
    world-space hand orientation.

    Raises LowConfidenceHand below `min_confidence` to signal "keep the
    default wrist pose".
    """
    if hand.confidence < min_confidence:
        raise LowConfidenceHand(
            f"{hand.side} hand confidence {hand.confidence:.3f} < {min_confidence:.3f}"
        )
    world_hand = cam.rotation_c2w_cols() @ hand.global_orientation
    return chain_rotation.T @ world_hand


def _wrist_body_row(asset: BodyModelAsset, wrist: int) -> int:
    rows = np.flatnonzero(asset.body_joint_ids == wrist)
    if not len(rows):
        raise ValidationError(f"wrist joint {wrist} is not a body-pose joint")
    return int(rows[0])


def merge_hands(
    seq: MotionSequence,
    hands: list[dict[str, HandEstimate]],
    asset: BodyModelAsset,
    cam: CameraModel,
    min_confidence: float = DEFAULT_CONFIDENCE_THRESHOLD,
) -> MotionSequence:
    """Splice per-frame hand estimates into a motion sequence.

    `hands[n]` maps "left"/"right" to estimates for frame n; missing sides or
    low-confidence estimates leave that frame's wrist and fingers untouched.
    """
    if len(hands) != seq.frame_count:
        raise ValidationError(
            f"hand track has {len(hands)} frames but the motion has {seq.frame_count}"
        )
    wrist_ids = {LEFT: asset.hand_joint_ids[0], RIGHT: asset.hand_joint_ids[1]}
    side_index = {LEFT: 0, RIGHT: 1}

    new_frames = []
    for n, pose in enumerate(seq.frames):
        frame_hands = hands[n] or {}
        body = None
        hand_pose = None
        for side, est in sorted(frame_hands.items()):
            if est is None:
                continue
            wrist = wrist_ids[side]
            parent = int(asset.joint_parents[wrist])
            chain = chain_global_rotation(asset, pose, parent)
            try:
                local = match_hand_orientation(est, cam, chain, min_confidence)
            except LowConfidenceHand:
                continue
            if body is None:
                body = np.array(pose.body_pose)
                hand_pose = np.array(pose.hand_pose)
            body[_wrist_body_row(asset, wrist)] = matrix_to_axis_angle(local)
            hand_pose[side_index[side]] = est.hand_pose
        if body is None:
            new_frames.append(pose)
        else:
            new_frames.append(replace(pose, body_pose=body, hand_pose=hand_pose))
    return seq.with_frames(new_frames)


# ---------------------------------------------------------------------------
# hand file I/O: JSON per frame { left?: {R, theta, conf}, right?: ... }
# ---------------------------------------------------------------------------

def load_hand_track(path: str | Path) -> list[dict[str, HandEstimate]]:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid hand JSON: {exc}") from exc
    if not isinstance(doc, list):
        raise ValidationError(f"{path}: hand file must be a JSON list of frames")
    track = []
    for i, frame in enumerate(doc):
        entry: dict[str, HandEstimate] = {}
        for side in (LEFT, RIGHT):
            if frame.get(side) is None:
                continue
            raw = frame[side]
            try:
                entry[side] = HandEstimate(
                    side=side,
                    global_orientation=np.asarray(raw["R"], dtype=np.float64).reshape(3, 3),
                    hand_pose=np.asarray(raw["theta"], dtype=np.float64).reshape(15, 3),
                    confidence=float(raw["conf"]),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ValidationError(f"{path}: frame {i} {side} hand: {exc}") from exc
        track.append(entry)
    return track


def save_hand_track(path: str | Path, track: list[dict[str, HandEstimate]]) -> None:
    doc = []
    for frame in track:
        item = {}
        for side, est in frame.items():
            item[side] = {
                "R": [float(x) for x in est.global_orientation.reshape(-1)],
                "theta": [float(x) for x in est.hand_pose.reshape(-1)],
                "conf": float(est.confidence),
            }
        doc.append(item)
    Path(path).write_text(json.dumps(doc))
