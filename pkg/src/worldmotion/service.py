"""Session-oriented HTTP facade over the editing pipeline.

The interactive studio drives this API: load a scene, propose trajectories,
preview guidance maps and projected skeletons, then export. All geometry
math stays server-side; clients receive images and 2D polylines only, so
the UI cannot drift numerically from the pipeline.

Sessions live in memory. Mutations are serialized per session and carry a
version token; a stale token is rejected with 409. Responses are pure
functions of (session state, request): the preview cache only changes
latency, never bytes.
"""
from __future__ import annotations

import io
import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import Response
from PIL import Image
from pydantic import BaseModel, Field

from .bank import MotionBank, loop_clip
from .body import BodyModelAsset, load_asset, skin_vertices
from .config import EditConfig, config_from_dict
from .errors import ValidationError, WorldMotionError
from .ingest import EstimatorBundle, parse_bundle
from .io_formats import sha256_bytes
from .motion import MotionSequence, save_sequence
from .pipeline import (
    EditResult,
    edit_motion,
    hand_submesh_ids,
    render_motion,
    skeleton_polylines,
)
from .render import rasterize_frame
from .trajectory import Keypoint
from .worldframe import camera_to_json_dict

MAX_PREVIEW_FRAMES = 16


class SessionCreate(BaseModel):
    bundle_path: str
    asset_path: str
    config: dict = Field(default_factory=dict)


class KeypointIn(BaseModel):
    u: float
    v: float
    frame: Optional[int] = None


class TrajectoryPut(BaseModel):
    version: int
    keypoints: list[KeypointIn] = Field(min_length=2)


class ClipPut(BaseModel):
    version: int
    clip_id: str
    n_frames: Optional[int] = None
    blend_window: int = 4


class PreviewPost(BaseModel):
    frames: list[int] = Field(min_length=1, max_length=MAX_PREVIEW_FRAMES)
    resolution: list[int] = Field(default=[256, 256], min_length=2, max_length=2)
    maps: list[str] = Field(default=["semantic"])


class ExportPost(BaseModel):
    out_dir: str
    resolution: list[int] = Field(default=[512, 512], min_length=2, max_length=2)


@dataclass
class EditSession:
    id: str
    bundle: EstimatorBundle
    asset: BodyModelAsset
    config: EditConfig
    version: int = 0
    keypoints: tuple[Keypoint, ...] | None = None
    clip_id: str | None = None
    clip_frames: int | None = None
    blend_window: int = 4
    lock: threading.Lock = field(default_factory=threading.Lock)
    image_cache: dict[str, bytes] = field(default_factory=dict)
    result_cache: dict[int, EditResult] = field(default_factory=dict)


def _png_bytes(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return buf.getvalue()


def create_app(bank_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="worldmotion edit service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    sessions: dict[str, EditSession] = {}
    bank = MotionBank(bank_dir) if bank_dir is not None else None

    def get_session(session_id: str) -> EditSession:
        if session_id not in sessions:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        return sessions[session_id]

    def current_sequence(s: EditSession) -> tuple[MotionSequence, EditResult | None]:
        """Edited sequence for the session state, or the source scene when no
        trajectory has been proposed yet."""
        if s.keypoints is None:
            seq = s.bundle.body_sequence
            if s.clip_id is not None:
                clip = bank.get(s.clip_id)
                seq = loop_clip(clip, s.clip_frames or s.bundle.frame_count, s.blend_window)
            return seq, None
        if s.version not in s.result_cache:
            clip = bank.get(s.clip_id) if s.clip_id is not None else None
            s.result_cache[s.version] = edit_motion(
                s.bundle, s.asset, s.keypoints, s.config, clip=clip,
                n_frames=s.clip_frames, blend_window=s.blend_window,
            )
        result = s.result_cache[s.version]
        return result.sequence, result

    def check_version(s: EditSession, version: int) -> None:
        if version != s.version:
            raise HTTPException(
                status_code=409,
                detail=f"version {version} does not match current {s.version}",
            )

    @app.exception_handler(WorldMotionError)
    async def _domain_error(request, exc: WorldMotionError):
        from fastapi.responses import JSONResponse

        status = 422 if isinstance(exc, ValidationError) else 409
        return JSONResponse(status_code=status, content={"detail": str(exc)})

    @app.post("/sessions")
    def create_session(body: SessionCreate):
        bundle = parse_bundle(body.bundle_path)
        asset = load_asset(body.asset_path)
        config = config_from_dict(body.config, source="session config")
        sid = uuid.uuid4().hex[:12]
        sessions[sid] = EditSession(id=sid, bundle=bundle, asset=asset, config=config)
        return {
            "id": sid,
            "version": 0,
            "frame_count": bundle.frame_count,
            "fps": bundle.body_sequence.fps,
            "camera": camera_to_json_dict(bundle.camera),
            "first_frame_image": f"/sessions/{sid}/background.png",
        }

    @app.get("/sessions/{session_id}/background.png")
    def background(session_id: str):
        """Semantic render of the scene's first frame, for drawing over."""
        s = get_session(session_id)
        key = "background"
        if key not in s.image_cache:
            cam = s.bundle.camera
            verts = skin_vertices(s.asset, s.bundle.body_sequence.frames[0]).vertices
            frame = rasterize_frame(
                verts, s.asset.faces, s.asset.semantic_vertex_colors, cam,
                (cam.width, cam.height), near=s.config.near_plane,
            )
            s.image_cache[key] = _png_bytes(frame.semantic)
        return Response(content=s.image_cache[key], media_type="image/png")

    @app.put("/sessions/{session_id}/trajectory")
    def put_trajectory(session_id: str, body: TrajectoryPut):
        s = get_session(session_id)
        with s.lock:
            check_version(s, body.version)
            keypoints = tuple(Keypoint(u=k.u, v=k.v, frame=k.frame) for k in body.keypoints)
            s.keypoints = keypoints
            s.version += 1
            _, result = current_sequence(s)
        report = result.report
        return {
            "version": s.version,
            "points2d": result.trajectory2d.tolist(),
            "path3d": result.trajectory3d.positions.tolist(),
            "headings": result.trajectory3d.headings.tolist(),
            "rescale_factor": report["arc"]["rescale_factor"],
            "degenerate_frames": report["degenerate_frames"],
            "warnings": _warnings_from_report(report),
        }

    @app.put("/sessions/{session_id}/clip")
    def put_clip(session_id: str, body: ClipPut):
        if bank is None:
            raise HTTPException(status_code=422, detail="no motion bank configured")
        s = get_session(session_id)
        with s.lock:
            check_version(s, body.version)
            clip = bank.get(body.clip_id)  # raises ValidationError -> 422 if unknown
            s.clip_id = body.clip_id
            s.clip_frames = body.n_frames
            s.blend_window = body.blend_window
            s.version += 1
        return {
            "version": s.version,
            "clip": {
                "id": clip.id,
                "tags": list(clip.tags),
                "source_frames": clip.sequence.frame_count,
                "target_frames": body.n_frames or s.bundle.frame_count,
                "blend_window": body.blend_window,
            },
        }

    @app.get("/sessions/{session_id}/clips")
    def list_clips(session_id: str):
        get_session(session_id)
        if bank is None:
            return {"clips": []}
        entries = bank.entries()
        return {"clips": [{"id": cid, **entries[cid]} for cid in sorted(entries)]}

    @app.post("/sessions/{session_id}/preview")
    def preview(session_id: str, body: PreviewPost):
        s = get_session(session_id)
        bad = [m for m in body.maps if m not in ("depth", "normal", "semantic", "hand", "mask")]
        if bad:
            raise HTTPException(status_code=422, detail=f"unknown map types {bad}")
        with s.lock:
            seq, _ = current_sequence(s)
            n = seq.frame_count
            frames = sorted(set(body.frames))
            if any(f < 0 or f >= n for f in frames):
                raise HTTPException(status_code=422, detail=f"frame out of range [0, {n})")
            w, h = body.resolution
            cam = s.bundle.camera  # guidance must align with the background video
            hand_ids = hand_submesh_ids(s.asset) if "hand" in body.maps else None
            items = []
            for f in frames:
                verts = skin_vertices(s.asset, seq.frames[f]).vertices
                g = rasterize_frame(
                    verts, s.asset.faces, s.asset.semantic_vertex_colors, cam, (w, h),
                    near=s.config.near_plane, hand_vertex_ids=hand_ids,
                    occlusion_delta=s.config.occlusion_delta,
                )
                encoded = {
                    "depth": np.clip(np.round(g.depth * 1000.0), 0, 65535).astype(np.uint16),
                    "normal": g.normal,
                    "semantic": g.semantic,
                    "hand": g.hand,
                    "mask": g.mask * 255,
                }
                for m in body.maps:
                    png = _png_bytes(encoded[m])
                    key = sha256_bytes(png)[:24]
                    s.image_cache[key] = png
                    items.append(
                        {"frame": f, "map": m, "hash": key,
                         "url": f"/sessions/{s.id}/images/{key}.png"}
                    )
            polylines = skeleton_polylines(s.asset, seq, cam, frames)
        return {"version": s.version, "items": items,
                "polylines": {str(k): v for k, v in polylines.items()}}

    @app.get("/sessions/{session_id}/images/{key}.png")
    def image(session_id: str, key: str):
        s = get_session(session_id)
        if key not in s.image_cache:
            raise HTTPException(status_code=404, detail="unknown image key")
        return Response(content=s.image_cache[key], media_type="image/png")

    @app.post("/sessions/{session_id}/export")
    def export(session_id: str, body: ExportPost):
        s = get_session(session_id)
        with s.lock:
            seq, result = current_sequence(s)
            out_dir = Path(body.out_dir)
            out_dir.mkdir(parents=True, exist_ok=True)
            seq_file = out_dir / "edited.motion.json"
            save_sequence(seq_file, seq)
            cam = s.bundle.camera  # same camera the CLI render command reads
            manifest = render_motion(
                seq, s.asset, cam, tuple(body.resolution), out_dir / "render", s.config
            )
            report = dict(result.report) if result is not None else {}
            (out_dir / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True))
        return {
            "version": s.version,
            "sequence_file": str(seq_file),
            "render_dir": str(out_dir / "render"),
            "manifest": manifest,
        }

    @app.get("/sessions/{session_id}")
    def session_info(session_id: str):
        s = get_session(session_id)
        return {
            "id": s.id,
            "version": s.version,
            "frame_count": s.bundle.frame_count,
            "has_trajectory": s.keypoints is not None,
            "clip": s.clip_id,
        }

    return app


def _warnings_from_report(report: dict) -> list[str]:
    warnings = []
    if report["degenerate_frames"]:
        warnings.append(
            f"{len(report['degenerate_frames'])} frame(s) move less than the heading "
            "threshold and hold their previous heading"
        )
    rescale = report["arc"]["rescale_factor"]
    if rescale and not 0.5 <= rescale <= 2.0:
        warnings.append(f"speed rescale factor {rescale:.2f} is far from 1")
    shift = report.get("foot_shift_m", {}).get("max", 0.0)
    if shift > 0.05:
        warnings.append(f"foot grounding moved frames up to {shift:.3f} m")
    return warnings


def main():  # pragma: no cover
    """Run the edit service: ``python -m worldmotion.service [bank_dir] [port]``."""
    import sys

    import uvicorn

    bank_dir = sys.argv[1] if len(sys.argv) > 1 else None
    port = int(sys.argv[2]) if len(sys.argv) > 2 else 8900
    uvicorn.run(create_app(bank_dir), host="127.0.0.1", port=port)


if __name__ == "__main__":  # pragma: no cover
    main()
