"""Motion sequence container and its JSON schema (shared repo-wide).

Schema: { version, fps, frame_count, coordinate_frame,
          frames: [ {gamma, phi, theta, beta, theta_h, expression?, child_factor?} ] }
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .body import FramePose
from .errors import ValidationError

SCHEMA_VERSION = 1
WORLD_FRAME = "world"
CAMERA_FRAME = "camera"


@dataclass(frozen=True)
class MotionSequence:
    """Per-frame parametric poses plus frame rate and coordinate-frame tag."""

    fps: float
    frames: tuple[FramePose, ...]
    coordinate_frame: str = WORLD_FRAME
    version: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.fps <= 0:
            raise ValidationError("fps must be positive")
        if not self.frames:
            raise ValidationError("motion sequence must contain at least one frame")
        if self.coordinate_frame not in (WORLD_FRAME, CAMERA_FRAME):
            raise ValidationError(f"unknown coordinate frame {self.coordinate_frame!r}")

    @property
    def frame_count(self) -> int:
        return len(self.frames)

    def translations(self) -> np.ndarray:
        """Root translations stacked to (N, 3)."""
        return np.stack([f.translation for f in self.frames])

    def with_frames(self, frames) -> "MotionSequence":
        return replace(self, frames=tuple(frames))


def _pose_to_dict(pose: FramePose) -> dict:
    doc = {
        "gamma": [float(x) for x in pose.translation],
        "phi": [float(x) for x in pose.global_orientation],
        "theta": np.asarray(pose.body_pose, dtype=float).tolist(),
        "beta": [float(x) for x in pose.shape],
        "theta_h": np.asarray(pose.hand_pose, dtype=float).tolist(),
    }
    if pose.expression is not None:
        doc["expression"] = pose.expression
    if pose.child_factor:
        doc["child_factor"] = float(pose.child_factor)
    return doc


def _pose_from_dict(doc: dict, where: str) -> FramePose:
    try:
        return FramePose(
            translation=np.asarray(doc["gamma"], dtype=np.float64).reshape(3),
            global_orientation=np.asarray(doc["phi"], dtype=np.float64).reshape(3),
            body_pose=np.asarray(doc["theta"], dtype=np.float64).reshape(-1, 3),
            shape=np.asarray(doc["beta"], dtype=np.float64).reshape(-1),
            hand_pose=np.asarray(doc["theta_h"], dtype=np.float64).reshape(2, 15, 3),
            expression=doc.get("expression"),
            child_factor=float(doc.get("child_factor", 0.0)),
        )
    except KeyError as exc:
        raise ValidationError(f"{where}: missing pose field {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{where}: malformed pose ({exc})") from exc


def sequence_to_json_dict(seq: MotionSequence) -> dict:
    return {
        "version": seq.version,
        "fps": float(seq.fps),
        "frame_count": seq.frame_count,
        "coordinate_frame": seq.coordinate_frame,
        "frames": [_pose_to_dict(f) for f in seq.frames],
    }


def sequence_from_json_dict(doc: dict, source: str = "motion") -> MotionSequence:
    for key in ("version", "fps", "frame_count", "coordinate_frame", "frames"):
        if key not in doc:
            raise ValidationError(f"{source}: missing field {key!r}")
    frames = tuple(
        _pose_from_dict(fd, f"{source}: frame {i}") for i, fd in enumerate(doc["frames"])
    )
    if len(frames) != int(doc["frame_count"]):
        raise ValidationError(
            f"{source}: frame_count={doc['frame_count']} but {len(frames)} frames present"
        )
    return MotionSequence(
        fps=float(doc["fps"]),
        frames=frames,
        coordinate_frame=str(doc["coordinate_frame"]),
        version=int(doc["version"]),
    )


def save_sequence(path: str | Path, seq: MotionSequence) -> None:
    Path(path).write_text(json.dumps(sequence_to_json_dict(seq), sort_keys=True))


def load_sequence(path: str | Path) -> MotionSequence:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid motion JSON: {exc}") from exc
    return sequence_from_json_dict(doc, source=str(path))
