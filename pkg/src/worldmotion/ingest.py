"""Parse external-estimator outputs into canonical types.

Bundle layout (one directory per scene)::

    bundle/
      bundle.json            {"schema_version": 1, ...}   (unknown fields kept)
      body.motion.json       world-space MotionSequence
      joints_world.bin       array container {"joints": (N, J, 3) m}
      joints_cam.bin         array container {"joints": (N, J, 3) m}
      camera.json            intrinsics + extrinsics + f1
      hands.json             optional per-frame hand estimates
      depth/                 optional *.pfm + meta.json {"f2": px}

Parsing is strict: any deviation raises BundleError naming the offending
file and field; there are no partial bundles.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import BundleError, DegenerateGeometryError
from .hands import HandEstimate, load_hand_track, save_hand_track
from .io_formats import load_arrays, save_arrays
from .motion import MotionSequence, load_sequence, save_sequence
from .worldframe import CameraModel, estimate_rigid_transform, load_camera, save_camera

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class EstimatorBundle:
    """Validated estimator outputs for one scene."""

    body_sequence: MotionSequence  # world frame
    joints_world: np.ndarray  # (N, J, 3) m
    joints_camera: np.ndarray  # (N, J, 3) m
    camera: CameraModel
    hands: list[dict[str, HandEstimate]] | None = None
    depth_files: tuple[Path, ...] | None = None
    depth_focal: float | None = None  # f2 of the depth estimator's camera
    extra: dict | None = None  # unknown bundle.json fields, preserved

    @property
    def frame_count(self) -> int:
        return self.body_sequence.frame_count

    @property
    def joint_count(self) -> int:
        return self.joints_world.shape[1]


def write_bundle(
    path: str | Path,
    body_sequence: MotionSequence,
    joints_world: np.ndarray,
    joints_camera: np.ndarray,
    camera: CameraModel,
    hands: list[dict[str, HandEstimate]] | None = None,
    depth_maps: list[np.ndarray] | None = None,
    depth_focal: float | None = None,
    extra: dict | None = None,
) -> Path:
    """Write a bundle directory in the documented layout."""
    from .io_formats import write_pfm

    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    doc = dict(extra or {})
    doc["schema_version"] = SCHEMA_VERSION
    (path / "bundle.json").write_text(json.dumps(doc, indent=2, sort_keys=True))
    save_sequence(path / "body.motion.json", body_sequence)
    save_arrays(path / "joints_world.bin", {"joints": np.asarray(joints_world, dtype=np.float64)},
                {"kind": "joints/1"})
    save_arrays(path / "joints_cam.bin", {"joints": np.asarray(joints_camera, dtype=np.float64)},
                {"kind": "joints/1"})
    save_camera(path / "camera.json", camera)
    if hands is not None:
        save_hand_track(path / "hands.json", hands)
    if depth_maps is not None:
        depth_dir = path / "depth"
        depth_dir.mkdir(exist_ok=True)
        if depth_focal is None:
            raise BundleError("depth maps require depth_focal (f2)")
        (depth_dir / "meta.json").write_text(json.dumps({"f2": float(depth_focal)}))
        for i, dm in enumerate(depth_maps):
            write_pfm(depth_dir / f"frame_{i:06d}.pfm", dm)
    return path


def _load_joints(path: Path, n_expected: int | None) -> np.ndarray:
    if not path.exists():
        raise BundleError(f"{path.name}: missing required track")
    try:
        arrays, meta = load_arrays(path)
    except Exception as exc:
        raise BundleError(f"{path.name}: unreadable array container ({exc})") from exc
    if "joints" not in arrays:
        raise BundleError(f"{path.name}: missing 'joints' array")
    joints = arrays["joints"]
    if joints.ndim != 3 or joints.shape[2] != 3:
        raise BundleError(f"{path.name}: joints must be (N, J, 3), got {joints.shape}")
    if not np.isfinite(joints).all():
        raise BundleError(f"{path.name}: joints contain non-finite values")
    if n_expected is not None and joints.shape[0] != n_expected:
        raise BundleError(
            f"{path.name}: {joints.shape[0]} frames but body.motion.json has {n_expected}"
        )
    return joints


def parse_bundle(path: str | Path) -> EstimatorBundle:
    """Parse and fully validate a bundle directory."""
    path = Path(path)
    if not path.is_dir():
        raise BundleError(f"{path}: bundle directory does not exist")

    meta_path = path / "bundle.json"
    if not meta_path.exists():
        raise BundleError("bundle.json: missing required file")
    try:
        doc = json.loads(meta_path.read_text())
    except json.JSONDecodeError as exc:
        raise BundleError(f"bundle.json: invalid JSON ({exc})") from exc
    if "schema_version" not in doc:
        raise BundleError("bundle.json: missing field 'schema_version'")
    if int(doc["schema_version"]) != SCHEMA_VERSION:
        raise BundleError(
            f"bundle.json: unsupported schema_version {doc['schema_version']}"
        )
    extra = {k: v for k, v in doc.items() if k != "schema_version"}

    body_path = path / "body.motion.json"
    if not body_path.exists():
        raise BundleError("body.motion.json: missing required track")
    body = load_sequence(body_path)
    n = body.frame_count

    joints_world = _load_joints(path / "joints_world.bin", n)
    joints_cam = _load_joints(path / "joints_cam.bin", n)
    if joints_world.shape != joints_cam.shape:
        raise BundleError(
            f"joints_world.bin/joints_cam.bin: shapes differ "
            f"({joints_world.shape} vs {joints_cam.shape})"
        )

    cam_path = path / "camera.json"
    if not cam_path.exists():
        raise BundleError("camera.json: missing required file")
    camera = load_camera(cam_path)

    hands = None
    if (path / "hands.json").exists():
        hands = load_hand_track(path / "hands.json")
        if len(hands) != n:
            raise BundleError(
                f"hands.json: {len(hands)} frames but body.motion.json has {n}"
            )

    depth_files = None
    depth_focal = None
    depth_dir = path / "depth"
    if depth_dir.is_dir():
        files = tuple(sorted(depth_dir.glob("*.pfm")))
        if files:
            meta_file = depth_dir / "meta.json"
            if not meta_file.exists():
                raise BundleError("depth/meta.json: missing (must provide f2)")
            try:
                depth_meta = json.loads(meta_file.read_text())
                depth_focal = float(depth_meta["f2"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise BundleError(f"depth/meta.json: bad or missing 'f2' ({exc})") from exc
            if len(files) != n:
                raise BundleError(
                    f"depth/: {len(files)} maps but body.motion.json has {n} frames"
                )
            depth_files = files

    return EstimatorBundle(
        body_sequence=body,
        joints_world=joints_world,
        joints_camera=joints_cam,
        camera=camera,
        hands=hands,
        depth_files=depth_files,
        depth_focal=depth_focal,
        extra=extra,
    )


def derive_camera_registration(bundle: EstimatorBundle) -> tuple[EstimatorBundle, float]:
    """Fill R_w2c/T_w2c from rigid registration of the pooled joint tracks.

    Registers world-space joints onto camera-space joints over all frames and
    returns the updated bundle plus the mean per-point residual in meters.
    """
    src = bundle.joints_world.reshape(-1, 3)
    dst = bundle.joints_camera.reshape(-1, 3)
    try:
        R_col, t, _ = estimate_rigid_transform(src, dst)
    except DegenerateGeometryError as exc:
        raise DegenerateGeometryError(f"camera registration failed: {exc}") from exc
    residual = float(np.linalg.norm(src @ R_col.T + t - dst, axis=1).mean())
    cam = bundle.camera
    registered = CameraModel(
        K=cam.K,
        f1=cam.f1,
        R_w2c=R_col.T,  # row-convention storage
        T_w2c=t,
        width=cam.width,
        height=cam.height,
    )
    return replace(bundle, camera=registered), residual
