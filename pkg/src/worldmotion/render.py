"""Software z-buffer rasterizer for guidance maps.

Renders depth, normal, semantic-color, hand-color and foreground-mask images
that are pixel-aligned with the source camera. Determinism is part of the
contract: identical inputs produce byte-identical images regardless of the
worker count, so triangles rasterize with a top-left fill rule, depth ties
break toward the lower face index, and frames are rendered independently.

No anti-aliasing, no shading, no back-face culling (face normals are flipped
toward the camera instead; skinned meshes are not reliably watertight).
"""
from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateGeometryError, ValidationError
from .io_formats import (
    sha256_file,
    write_depth_png,
    write_gray_png,
    write_rgb_png,
)
from .trajectory import world_to_camera
from .worldframe import CameraModel, camera_to_json_dict

NEAR_DEFAULT = 1e-4  # m
HAND_OCCLUSION_DELTA = 5e-3  # m; hand pixels behind the body by more than this vanish
HAND_COLORS = {"left": (0.9, 0.25, 0.2), "right": (0.2, 0.5, 0.9)}
MAP_TYPES = ("depth", "normal", "semantic", "hand", "mask")

try:  # the jit kernel is ~50x faster; the numpy path remains as fallback
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def _njit(**_kwargs):
        def deco(fn):
            return fn

        return deco


@dataclass(frozen=True)
class GuidanceFrame:
    """One frame's guidance maps.

    depth: meters, 0 = background. normal: camera-space unit normals encoded
    (n+1)/2*255. semantic: per-vertex colors blended perspective-correct.
    hand: hand submesh colors with occluded pixels zeroed. mask: foreground
    coverage, exactly where depth > 0.
    """

    depth: np.ndarray  # (H, W) float64 m
    normal: np.ndarray  # (H, W, 3) uint8
    semantic: np.ndarray  # (H, W, 3) uint8
    hand: np.ndarray  # (H, W, 3) uint8
    mask: np.ndarray  # (H, W) uint8 in {0, 1}

    def __post_init__(self):
        if (self.depth < 0).any():
            raise ValidationError("depth must be non-negative")
        if not np.array_equal(self.mask != 0, self.depth > 0):
            raise ValidationError("mask must be set exactly where depth > 0")


def scaled_intrinsics(cam: CameraModel, width: int, height: int) -> np.ndarray:
    """K rescaled from the camera's native size to the render resolution."""
    sx = width / cam.width
    sy = height / cam.height
    scale = np.array([[sx, 0.0, 0.0], [0.0, sy, 0.0], [0.0, 0.0, 1.0]])
    return scale @ cam.K


def project_vertices(
    points: np.ndarray, cam: CameraModel, near: float = NEAR_DEFAULT,
    resolution: tuple[int, int] | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Perspective-project world points.

    Returns (uv (N, 2) px, z_cam (N,) m, in_front (N,) bool). Points at or
    behind the near plane are flagged for clipping; their uv rows are zero.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    cam_pts = world_to_camera(pts, cam)
    z = cam_pts[:, 2]
    in_front = z > near
    K = cam.K if resolution is None else scaled_intrinsics(cam, *resolution)
    uv = np.zeros((len(pts), 2))
    safe_z = np.where(in_front, z, 1.0)
    uv[:, 0] = (K[0, 0] * cam_pts[:, 0] + K[0, 1] * cam_pts[:, 1]) / safe_z + K[0, 2]
    uv[:, 1] = (K[1, 1] * cam_pts[:, 1]) / safe_z + K[1, 2]
    uv[~in_front] = 0.0
    return uv, z, in_front


def project_vertex(
    point: np.ndarray, cam: CameraModel, near: float = NEAR_DEFAULT
) -> tuple[float, float, float]:
    """Project a single world point; raises when it violates the near plane."""
    uv, z, ok = project_vertices(np.asarray(point, dtype=np.float64).reshape(1, 3), cam, near)
    if not ok[0]:
        raise DegenerateGeometryError(f"point at camera depth {z[0]:.6g} m is behind the near plane")
    return float(uv[0, 0]), float(uv[0, 1]), float(z[0])


def _is_top_left(ax, ay, bx, by) -> bool:
    # positive-orientation winding (see the kernels): top = horizontal going
    # right, left = going up (screen y grows downward)
    return (ay == by and bx > ax) or (by < ay)


def _face_normals_camera(cam_pts: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Unit geometric normals in camera space, flipped to face the camera."""
    if not len(faces):
        return np.zeros((0, 3))
    p0 = cam_pts[faces[:, 0]]
    p1 = cam_pts[faces[:, 1]]
    p2 = cam_pts[faces[:, 2]]
    n = np.cross(p1 - p0, p2 - p0)
    length = np.linalg.norm(n, axis=1)
    ok = length > 0
    n[ok] /= length[ok, None]
    centroid = (p0 + p1 + p2) / 3.0
    flip = np.einsum("fd,fd->f", n, centroid) > 0.0
    n[flip] = -n[flip]
    n[~ok] = 0.0
    return n


@_njit(cache=True)
def _raster_kernel(u, v, z, faces, face_normals, colors, has_colors, width, height,
                   near, zbuf, normal_buf, color_buf, face_buf):  # pragma: no cover
    for fi in range(faces.shape[0]):
        i0 = faces[fi, 0]
        i1 = faces[fi, 1]
        i2 = faces[fi, 2]
        z0 = z[i0]
        z1 = z[i1]
        z2 = z[i2]
        if z0 <= near or z1 <= near or z2 <= near:
            continue  # whole-triangle near clip
        x0 = u[i0]
        y0 = v[i0]
        x1 = u[i1]
        y1 = v[i1]
        x2 = u[i2]
        y2 = v[i2]
        area = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if area == 0.0:
            continue
        if area < 0.0:
            tmp = i1
            i1 = i2
            i2 = tmp
            tx = x1
            ty = y1
            x1 = x2
            y1 = y2
            x2 = tx
            y2 = ty
            tz = z1
            z1 = z2
            z2 = tz
            area = -area
        if face_normals[fi, 0] == 0.0 and face_normals[fi, 1] == 0.0 and face_normals[fi, 2] == 0.0:
            continue  # 3D-degenerate face

        lo_x = int(np.floor(min(x0, min(x1, x2)) - 0.5))
        hi_x = int(np.ceil(max(x0, max(x1, x2))))
        lo_y = int(np.floor(min(y0, min(y1, y2)) - 0.5))
        hi_y = int(np.ceil(max(y0, max(y1, y2))))
        if lo_x < 0:
            lo_x = 0
        if lo_y < 0:
            lo_y = 0
        if hi_x > width - 1:
            hi_x = width - 1
        if hi_y > height - 1:
            hi_y = height - 1
        if lo_x > hi_x or lo_y > hi_y:
            continue

        # top-left fill rule flags, one per edge (edge k is opposite vertex k)
        tl0 = (y1 == y2 and x2 > x1) or (y2 < y1)
        tl1 = (y2 == y0 and x0 > x2) or (y0 < y2)
        tl2 = (y0 == y1 and x1 > x0) or (y1 < y0)

        for pyi in range(lo_y, hi_y + 1):
            py = pyi + 0.5
            for pxi in range(lo_x, hi_x + 1):
                px = pxi + 0.5
                w0 = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
                if w0 < 0.0 or (w0 == 0.0 and not tl0):
                    continue
                w1 = (x0 - x2) * (py - y2) - (y0 - y2) * (px - x2)
                if w1 < 0.0 or (w1 == 0.0 and not tl1):
                    continue
                w2 = (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0)
                if w2 < 0.0 or (w2 == 0.0 and not tl2):
                    continue
                l0 = w0 / area
                l1 = w1 / area
                l2 = w2 / area
                inv_z = l0 / z0 + l1 / z1 + l2 / z2
                depth = 1.0 / inv_z
                if depth < zbuf[pyi, pxi]:
                    zbuf[pyi, pxi] = depth
                    face_buf[pyi, pxi] = fi
                    normal_buf[pyi, pxi, 0] = face_normals[fi, 0]
                    normal_buf[pyi, pxi, 1] = face_normals[fi, 1]
                    normal_buf[pyi, pxi, 2] = face_normals[fi, 2]
                    if has_colors:
                        a = l0 / z0
                        b = l1 / z1
                        c = l2 / z2
                        for ch in range(3):
                            color_buf[pyi, pxi, ch] = (
                                a * colors[i0, ch] + b * colors[i1, ch] + c * colors[i2, ch]
                            ) * depth


def _raster(
    vertices: np.ndarray,
    faces: np.ndarray,
    colors: np.ndarray | None,
    cam: CameraModel,
    resolution: tuple[int, int],
    near: float = NEAR_DEFAULT,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Core z-buffer pass.

    Returns (depth (H, W) with +inf background, normal (H, W, 3) float,
    color (H, W, 3) float, face_id (H, W) int32 with -1 background).
    """
    width, height = int(resolution[0]), int(resolution[1])
    if width <= 0 or height <= 0:
        raise ValidationError("resolution must be positive")
    verts = np.asarray(vertices, dtype=np.float64)
    cam_pts = world_to_camera(verts, cam) if len(verts) else np.zeros((0, 3))
    z = cam_pts[:, 2] if len(verts) else np.zeros(0)
    K = scaled_intrinsics(cam, width, height)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = (K[0, 0] * cam_pts[:, 0] + K[0, 1] * cam_pts[:, 1]) / z + K[0, 2]
        v = (K[1, 1] * cam_pts[:, 1]) / z + K[1, 2]

    zbuf = np.full((height, width), np.inf)
    normal_buf = np.zeros((height, width, 3))
    color_buf = np.zeros((height, width, 3))
    face_buf = np.full((height, width), -1, dtype=np.int32)
    if not len(faces) or not len(verts):
        return zbuf, normal_buf, color_buf, face_buf

    face_arr = np.ascontiguousarray(faces, dtype=np.int64)
    face_normals = _face_normals_camera(cam_pts, face_arr)
    has_colors = colors is not None
    color_arr = (
        np.ascontiguousarray(colors, dtype=np.float64) if has_colors else np.zeros((1, 3))
    )
    impl = _raster_kernel if HAVE_NUMBA else _raster_python
    impl(
        np.ascontiguousarray(u), np.ascontiguousarray(v), np.ascontiguousarray(z),
        face_arr, face_normals, color_arr, has_colors, width, height, float(near),
        zbuf, normal_buf, color_buf, face_buf,
    )
    return zbuf, normal_buf, color_buf, face_buf


def _raster_python(u, v, z, faces, face_normals, colors, has_colors, width, height,
                   near, zbuf, normal_buf, color_buf, face_buf):
    """Pure-numpy triangle loop; same semantics as the jit kernel."""
    for fi in range(len(faces)):
        i0, i1, i2 = (int(x) for x in faces[fi])
        if z[i0] <= near or z[i1] <= near or z[i2] <= near:
            continue
        x0, y0, x1, y1, x2, y2 = u[i0], v[i0], u[i1], v[i1], u[i2], v[i2]
        area = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if area == 0.0:
            continue
        if area < 0.0:
            i1, i2 = i2, i1
            x1, y1, x2, y2 = x2, y2, x1, y1
            area = -area
        if not face_normals[fi].any():
            continue

        lo_x = max(0, int(np.floor(min(x0, x1, x2) - 0.5)))
        hi_x = min(width - 1, int(np.ceil(max(x0, x1, x2))))
        lo_y = max(0, int(np.floor(min(y0, y1, y2) - 0.5)))
        hi_y = min(height - 1, int(np.ceil(max(y0, y1, y2))))
        if lo_x > hi_x or lo_y > hi_y:
            continue

        px = np.arange(lo_x, hi_x + 1) + 0.5
        py = (np.arange(lo_y, hi_y + 1) + 0.5)[:, None]
        w0 = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
        w1 = (x0 - x2) * (py - y2) - (y0 - y2) * (px - x2)
        w2 = (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0)
        inside = (
            (w0 > 0) | ((w0 == 0) & _is_top_left(x1, y1, x2, y2))
        ) & (
            (w1 > 0) | ((w1 == 0) & _is_top_left(x2, y2, x0, y0))
        ) & (
            (w2 > 0) | ((w2 == 0) & _is_top_left(x0, y0, x1, y1))
        )
        if not inside.any():
            continue

        l0 = w0 / area
        l1 = w1 / area
        l2 = w2 / area
        inv_z = l0 / z[i0] + l1 / z[i1] + l2 / z[i2]
        depth = 1.0 / inv_z

        tile = zbuf[lo_y : hi_y + 1, lo_x : hi_x + 1]
        win = inside & (depth < tile)
        if not win.any():
            continue
        tile[win] = depth[win]
        face_buf[lo_y : hi_y + 1, lo_x : hi_x + 1][win] = fi
        normal_buf[lo_y : hi_y + 1, lo_x : hi_x + 1][win] = face_normals[fi]
        if has_colors:
            blended = (
                (l0 / z[i0])[..., None] * colors[i0]
                + (l1 / z[i1])[..., None] * colors[i1]
                + (l2 / z[i2])[..., None] * colors[i2]
            ) * depth[..., None]
            color_buf[lo_y : hi_y + 1, lo_x : hi_x + 1][win] = blended[win]


def encode_normals(normal: np.ndarray, covered: np.ndarray) -> np.ndarray:
    out = np.zeros(normal.shape, dtype=np.uint8)
    enc = np.clip(np.round((normal + 1.0) * 0.5 * 255.0), 0, 255).astype(np.uint8)
    out[covered] = enc[covered]
    return out


def encode_colors(color: np.ndarray, covered: np.ndarray) -> np.ndarray:
    out = np.zeros(color.shape, dtype=np.uint8)
    enc = np.clip(np.round(color * 255.0), 0, 255).astype(np.uint8)
    out[covered] = enc[covered]
    return out


def rasterize_frame(
    vertices: np.ndarray,
    faces: np.ndarray,
    vertex_colors: np.ndarray,
    cam: CameraModel,
    resolution: tuple[int, int],
    near: float = NEAR_DEFAULT,
    hand_vertex_ids: dict[str, np.ndarray] | None = None,
    occlusion_delta: float = HAND_OCCLUSION_DELTA,
) -> GuidanceFrame:
    """Rasterize one frame into a full set of guidance maps."""
    zbuf, normal, color, face_id = _raster(vertices, faces, vertex_colors, cam, resolution, near)
    covered = face_id >= 0
    depth = np.where(covered, zbuf, 0.0)
    hand = (
        render_hands_with_occlusion(
            vertices, faces, hand_vertex_ids, cam, resolution, near,
            body_depth=np.where(covered, zbuf, np.inf), delta=occlusion_delta,
        )
        if hand_vertex_ids
        else np.zeros((*depth.shape, 3), dtype=np.uint8)
    )
    return GuidanceFrame(
        depth=depth,
        normal=encode_normals(normal, covered),
        semantic=encode_colors(color, covered),
        hand=hand,
        mask=covered.astype(np.uint8),
    )


def submesh_faces(faces: np.ndarray, vertex_ids: np.ndarray) -> np.ndarray:
    """Faces whose three corners all belong to the vertex subset."""
    keep = np.zeros(int(faces.max()) + 1 if len(faces) else 0, dtype=bool)
    keep[np.asarray(vertex_ids, dtype=np.int64)] = True
    sel = keep[faces].all(axis=1)
    return faces[sel]


def render_hands_with_occlusion(
    body_vertices: np.ndarray,
    faces: np.ndarray,
    hand_vertex_ids: dict[str, np.ndarray],
    cam: CameraModel,
    resolution: tuple[int, int],
    near: float = NEAR_DEFAULT,
    body_depth: np.ndarray | None = None,
    delta: float = HAND_OCCLUSION_DELTA,
) -> np.ndarray:
    """Hand color map; pixels where the body is closer by more than `delta` are zeroed.

    The hand submeshes are vertex subsets of the body mesh, rendered alone and
    then depth-tested against the full-body pass.
    """
    if body_depth is None:
        zbuf, _, _, face_id = _raster(body_vertices, faces, None, cam, resolution, near)
        body_depth = np.where(face_id >= 0, zbuf, np.inf)

    out = np.zeros((*body_depth.shape, 3), dtype=np.uint8)
    for side in sorted(hand_vertex_ids):
        ids = hand_vertex_ids[side]
        hand_faces = submesh_faces(faces, ids)
        if not len(hand_faces):
            continue
        zbuf, _, _, face_id = _raster(body_vertices, hand_faces, None, cam, resolution, near)
        covered = face_id >= 0
        visible = covered & ~(body_depth < zbuf - delta)
        color = np.clip(np.round(np.asarray(HAND_COLORS[side]) * 255.0), 0, 255).astype(np.uint8)
        out[visible] = color
    return out


# ---------------------------------------------------------------------------
# sequence rendering
# ---------------------------------------------------------------------------

def _frame_paths(out_dir: Path, index: int) -> dict[str, Path]:
    return {t: out_dir / t / f"frame_{index:06d}.png" for t in MAP_TYPES}


def write_guidance_frame(out_dir: str | Path, index: int, frame: GuidanceFrame) -> dict[str, str]:
    """Write one frame's five maps; returns relative path -> sha256."""
    out_dir = Path(out_dir)
    paths = _frame_paths(out_dir, index)
    write_depth_png(paths["depth"], frame.depth)
    write_rgb_png(paths["normal"], frame.normal)
    write_rgb_png(paths["semantic"], frame.semantic)
    write_rgb_png(paths["hand"], frame.hand)
    write_gray_png(paths["mask"], frame.mask * 255)
    return {
        str(p.relative_to(out_dir)): sha256_file(p) for p in paths.values()
    }


def _render_one(args) -> dict[str, str]:
    (out_dir, index, vertices, faces, colors, cam, resolution, near, hand_ids, delta) = args
    frame = rasterize_frame(
        vertices, faces, colors, cam, resolution, near,
        hand_vertex_ids=hand_ids, occlusion_delta=delta,
    )
    return write_guidance_frame(out_dir, index, frame)


def render_sequence(
    mesh_frames,
    faces: np.ndarray,
    vertex_colors: np.ndarray,
    cameras: CameraModel | list[CameraModel],
    resolution: tuple[int, int],
    out_dir: str | Path,
    near: float = NEAR_DEFAULT,
    hand_vertex_ids: dict[str, np.ndarray] | None = None,
    occlusion_delta: float = HAND_OCCLUSION_DELTA,
    workers: int = 1,
) -> dict:
    """Render every frame's guidance maps to disk and return the manifest.

    `cameras` is a single camera or one per frame. Output layout is
    ``<out>/<type>/frame_%06d.png``; the manifest records resolution,
    camera(s), encodings and per-file content hashes. Frames render in
    parallel across `workers` processes; output bytes do not depend on the
    worker count.
    """
    out_dir = Path(out_dir)
    frames = [np.asarray(f, dtype=np.float64) for f in mesh_frames]
    n = len(frames)
    cams = list(cameras) if isinstance(cameras, (list, tuple)) else [cameras] * n
    if len(cams) != n:
        raise ValidationError(f"{len(cams)} cameras for {n} frames")
    for t in MAP_TYPES:
        (out_dir / t).mkdir(parents=True, exist_ok=True)

    jobs = [
        (out_dir, i, frames[i], faces, vertex_colors, cams[i], resolution, near,
         hand_vertex_ids, occlusion_delta)
        for i in range(n)
    ]
    hashes: dict[str, str] = {}
    if workers > 1 and n > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for result in pool.map(_render_one, jobs):
                hashes.update(result)
    else:
        for job in jobs:
            hashes.update(_render_one(job))

    manifest = {
        "resolution": [int(resolution[0]), int(resolution[1])],
        "frame_count": n,
        "map_types": list(MAP_TYPES),
        "encodings": {
            "depth": "png16 millimeters, 0 = background",
            "normal": "png8 rgb, (n+1)/2*255, camera space",
            "semantic": "png8 rgb from per-vertex colors",
            "hand": "png8 rgb, occlusion-masked",
            "mask": "png8 gray, 255 = foreground",
        },
        "cameras": (
            camera_to_json_dict(cams[0])
            if all(c is cams[0] for c in cams)
            else [camera_to_json_dict(c) for c in cams]
        ),
        "near": near,
        "hashes": {k: hashes[k] for k in sorted(hashes)},
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return manifest


def default_vertex_colors(template_vertices: np.ndarray) -> np.ndarray:
    """Deterministic semantic palette: min-max normalized rest coordinates."""
    t = np.asarray(template_vertices, dtype=np.float64)
    lo, hi = t.min(axis=0), t.max(axis=0)
    return (t - lo) / np.where(hi - lo > 0, hi - lo, 1.0)
