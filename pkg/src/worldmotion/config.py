"""Pipeline configuration: one flat set of tolerances and switches.

Values can come from a TOML file; CLI flags override file values, and every
resolved value is echoed into the run report so results are reproducible.
"""
from __future__ import annotations

import dataclasses
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .errors import ValidationError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass(frozen=True)
class EditConfig:
    arc_norm: str = "l1"  # Eq.-faithful default; "l2" available
    rescale_arc: bool = True  # rescale the original profile to the drawn path's length
    heading_eps: float = 1e-5  # m; smaller displacements hold the previous heading
    heading_smooth_window: int = 9  # frames, odd; 1 disables smoothing
    alignment_yaw: float = 0.0  # rad; extra ground-plane yaw applied to headings
    yaw_only: bool = False  # remove only the yaw of the original orientation
    foot_window: int = 5  # frames, odd
    hand_confidence_threshold: float = 0.5
    near_plane: float = 1e-4  # m
    occlusion_delta: float = 5e-3  # m
    workers: int = 0  # 0 = one per available core

    def __post_init__(self):
        if self.arc_norm not in ("l1", "l2"):
            raise ValidationError(f"arc_norm must be 'l1' or 'l2', got {self.arc_norm!r}")
        for name in ("heading_smooth_window", "foot_window"):
            v = getattr(self, name)
            if v < 1 or v % 2 == 0:
                raise ValidationError(f"{name} must be odd and positive, got {v}")
        if self.workers < 0:
            raise ValidationError("workers must be >= 0")

    def resolved_workers(self) -> int:
        return self.workers if self.workers > 0 else (os.cpu_count() or 1)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def config_from_dict(doc: dict, source: str = "config") -> EditConfig:
    known = {f.name for f in dataclasses.fields(EditConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ValidationError(f"{source}: unknown config keys {sorted(unknown)}")
    return EditConfig(**doc)


def load_config(path: str | Path | None, overrides: dict | None = None) -> EditConfig:
    """Build a config from an optional TOML file plus explicit overrides."""
    doc: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as f:
                doc = tomllib.load(f)
        except tomllib.TOMLDecodeError as exc:
            raise ValidationError(f"{path}: invalid TOML: {exc}") from exc
    if overrides:
        doc.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_dict(doc, source=str(path) if path else "config overrides")
