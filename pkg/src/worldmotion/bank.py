"""Motion bank: store, tag, retrieve, loop and shape-retarget action clips.

Clips hold the "what" of a motion (body and hand pose over time) decoupled
from the "where" (trajectory). Persistence is a plain directory:
``bank/index.json`` plus ``bank/clips/<id>.motion.json``; no database.
"""
from __future__ import annotations

import json
import threading
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .motion import MotionSequence, load_sequence, save_sequence
from .rotations import slerp_axis_angle

INDEX_NAME = "index.json"
CLIP_DIR = "clips"


@dataclass(frozen=True)
class MotionClip:
    """A tagged, reusable action clip."""

    id: str
    tags: tuple[str, ...]
    sequence: MotionSequence
    loopable: bool = True
    source_meta: str = ""

    def __post_init__(self):
        if not self.id or "/" in self.id:
            raise ValidationError(f"clip id {self.id!r} must be a non-empty path-safe string")


def query_clips(clips: list[MotionClip], tag_filter: str | None = None) -> list[MotionClip]:
    """Clips matching the tag (case-insensitive); empty filter returns all. Id-sorted."""
    if tag_filter:
        needle = tag_filter.lower()
        clips = [c for c in clips if any(needle == t.lower() for t in c.tags)]
    return sorted(clips, key=lambda c: c.id)


def loop_clip(clip: MotionClip, n_frames: int, blend_window: int = 0) -> MotionSequence:
    """Repeat a clip to exactly `n_frames`, keeping the root path continuous.

    Each repetition is shifted by the accumulated net root displacement, so a
    translating clip walks on instead of teleporting back. Around each seam,
    rotation parameters of the first `blend_window` frames of the new cycle
    are spherically interpolated from the previous cycle's final pose toward
    their own values.
    """
    seq = clip.sequence
    length = seq.frame_count
    if length < 2:
        raise ValidationError("clip must have at least 2 frames to loop")
    if blend_window < 0 or blend_window >= length:
        raise ValidationError(
            f"blend window {blend_window} must be in [0, clip length {length})"
        )
    if n_frames < 1:
        raise ValidationError("target frame count must be positive")

    start = seq.frames[0].translation
    cycle_delta = seq.frames[-1].translation - start  # net root displacement per cycle

    frames = []
    for m in range(n_frames):
        cycle, i = divmod(m, length)
        pose = seq.frames[i]
        pose = pose.with_translation(pose.translation + cycle * cycle_delta)
        if blend_window and cycle > 0 and i < blend_window:
            w = (i + 1) / (blend_window + 1)
            held = seq.frames[-1]
            pose = replace(
                pose,
                global_orientation=slerp_axis_angle(held.global_orientation, seq.frames[i].global_orientation, w),
                body_pose=_blend_pose_rows(held.body_pose, seq.frames[i].body_pose, w),
                hand_pose=_blend_pose_rows(
                    held.hand_pose.reshape(-1, 3), seq.frames[i].hand_pose.reshape(-1, 3), w
                ).reshape(2, 15, 3),
            )
        frames.append(pose)
    return MotionSequence(fps=seq.fps, frames=tuple(frames), coordinate_frame=seq.coordinate_frame)


def _blend_pose_rows(a: np.ndarray, b: np.ndarray, w: float) -> np.ndarray:
    out = np.empty_like(np.asarray(a, dtype=np.float64))
    for r in range(out.shape[0]):
        out[r] = slerp_axis_angle(a[r], b[r], w)
    return out


def retarget_shape(clip: MotionClip, shape_ref: np.ndarray, child_factor: float = 0.0) -> MotionClip:
    """Carry the reference subject's shape (and child factor) onto every frame."""
    shape_ref = np.asarray(shape_ref, dtype=np.float64)
    first = clip.sequence.frames[0]
    if shape_ref.shape != first.shape.shape:
        raise ValidationError(
            f"reference shape length {shape_ref.shape} != clip's {first.shape.shape}"
        )
    if not 0.0 <= child_factor <= 1.0:
        raise ValidationError(f"child_factor {child_factor} outside [0, 1]")
    frames = tuple(
        replace(f, shape=shape_ref.copy(), child_factor=child_factor) for f in clip.sequence.frames
    )
    return replace(clip, sequence=clip.sequence.with_frames(frames))


class MotionBank:
    """Directory-backed clip library; reads are lock-free, mutation is serialized."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._lock = threading.Lock()
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / CLIP_DIR).mkdir(exist_ok=True)
        if not self._index_path.exists():
            self._write_index({})

    @property
    def _index_path(self) -> Path:
        return self.root / INDEX_NAME

    def _read_index(self) -> dict:
        try:
            return json.loads(self._index_path.read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{self._index_path}: corrupt bank index: {exc}") from exc

    def _write_index(self, index: dict) -> None:
        self._index_path.write_text(json.dumps(index, indent=2, sort_keys=True))

    def add(self, clip: MotionClip, overwrite: bool = False) -> None:
        with self._lock:
            index = self._read_index()
            if clip.id in index and not overwrite:
                raise ValidationError(f"clip {clip.id!r} already in bank")
            save_sequence(self.root / CLIP_DIR / f"{clip.id}.motion.json", clip.sequence)
            index[clip.id] = {
                "tags": list(clip.tags),
                "loopable": clip.loopable,
                "source_meta": clip.source_meta,
                "frame_count": clip.sequence.frame_count,
                "fps": clip.sequence.fps,
            }
            self._write_index(index)

    def get(self, clip_id: str) -> MotionClip:
        index = self._read_index()
        if clip_id not in index:
            raise ValidationError(f"clip {clip_id!r} not found in bank")
        entry = index[clip_id]
        seq = load_sequence(self.root / CLIP_DIR / f"{clip_id}.motion.json")
        return MotionClip(
            id=clip_id,
            tags=tuple(entry.get("tags", ())),
            sequence=seq,
            loopable=bool(entry.get("loopable", True)),
            source_meta=str(entry.get("source_meta", "")),
        )

    def ids(self) -> list[str]:
        return sorted(self._read_index())

    def query(self, tag_filter: str | None = None) -> list[MotionClip]:
        return query_clips([self.get(i) for i in self.ids()], tag_filter)

    def entries(self) -> dict:
        """Raw index entries (id -> metadata) for listings."""
        return self._read_index()
