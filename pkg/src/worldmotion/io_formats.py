"""On-disk interchange formats.

* Array container: one binary file holding named little-endian float64/int32
  arrays behind a JSON header, plus a pure-JSON twin for tiny test payloads.
* PFM grayscale depth maps (little-endian float32 meters).
* 16-bit PNG depth (millimeters, 0 = background) and 8-bit image helpers.
"""
from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ValidationError

ARRAY_MAGIC = b"GEOPAK01"
_DTYPES = {"<f8": np.dtype("<f8"), "<i4": np.dtype("<i4")}


def _canonical_dtype(arr: np.ndarray) -> str:
    if arr.dtype.kind == "f":
        return "<f8"
    if arr.dtype.kind in "iu":
        return "<i4"
    raise ValidationError(f"unsupported array dtype {arr.dtype}; only float64/int32 are stored")


def save_arrays(path: str | Path, arrays: dict[str, np.ndarray], meta: dict | None = None) -> None:
    """Write named arrays to a single binary container.

    Layout: 8-byte magic, u64 header length, UTF-8 JSON header, then each
    array's raw bytes in header order. Floats are stored as little-endian
    float64, integers as int32.
    """
    path = Path(path)
    entries = []
    blobs = []
    for name, arr in arrays.items():
        arr = np.asarray(arr)
        dtype = _canonical_dtype(arr)
        data = np.ascontiguousarray(arr.astype(_DTYPES[dtype]))
        entries.append({"name": name, "dtype": dtype, "shape": list(arr.shape)})
        blobs.append(data.tobytes())
    header = {"format": "arraypack/1", "arrays": entries, "meta": meta or {}}
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(ARRAY_MAGIC)
        f.write(struct.pack("<Q", len(header_bytes)))
        f.write(header_bytes)
        for blob in blobs:
            f.write(blob)


def load_arrays(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    """Read a binary array container; returns (arrays, meta).

    Files ending in .json are accepted as the pure-JSON twin produced by
    :func:`save_arrays_json`.
    """
    path = Path(path)
    if path.suffix == ".json":
        return load_arrays_json(path)
    with open(path, "rb") as f:
        magic = f.read(len(ARRAY_MAGIC))
        if magic != ARRAY_MAGIC:
            raise ValidationError(f"{path}: not an array container (bad magic {magic!r})")
        (header_len,) = struct.unpack("<Q", f.read(8))
        header = json.loads(f.read(header_len).decode("utf-8"))
        if header.get("format") != "arraypack/1":
            raise ValidationError(f"{path}: unknown container format {header.get('format')!r}")
        arrays: dict[str, np.ndarray] = {}
        for entry in header["arrays"]:
            dtype = _DTYPES.get(entry["dtype"])
            if dtype is None:
                raise ValidationError(f"{path}: array {entry['name']!r} has dtype {entry['dtype']!r}")
            shape = tuple(entry["shape"])
            count = int(np.prod(shape, dtype=np.int64)) if shape else 1
            raw = f.read(count * dtype.itemsize)
            if len(raw) != count * dtype.itemsize:
                raise ValidationError(f"{path}: truncated data for array {entry['name']!r}")
            arrays[entry["name"]] = np.frombuffer(raw, dtype=dtype).reshape(shape).copy()
    return arrays, header.get("meta", {})


def save_arrays_json(path: str | Path, arrays: dict[str, np.ndarray], meta: dict | None = None) -> None:
    """Pure-JSON variant of :func:`save_arrays` for tiny test assets."""
    doc = {"format": "arraypack/1", "meta": meta or {}, "arrays": []}
    for name, arr in arrays.items():
        arr = np.asarray(arr)
        doc["arrays"].append(
            {
                "name": name,
                "dtype": _canonical_dtype(arr),
                "shape": list(arr.shape),
                "data": arr.tolist(),
            }
        )
    Path(path).write_text(json.dumps(doc, sort_keys=True))


def load_arrays_json(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != "arraypack/1":
        raise ValidationError(f"{path}: unknown container format {doc.get('format')!r}")
    arrays = {}
    for entry in doc["arrays"]:
        arrays[entry["name"]] = np.asarray(entry["data"], dtype=_DTYPES[entry["dtype"]]).reshape(
            tuple(entry["shape"])
        )
    return arrays, doc.get("meta", {})


def write_pfm(path: str | Path, data: np.ndarray) -> None:
    """Write a grayscale PFM (little-endian float32, rows bottom-to-top)."""
    data = np.asarray(data, dtype=np.float32)
    if data.ndim != 2:
        raise ValidationError("PFM writer expects a 2D grayscale image")
    h, w = data.shape
    with open(path, "wb") as f:
        f.write(b"Pf\n")
        f.write(f"{w} {h}\n".encode("ascii"))
        f.write(b"-1.0\n")  # negative scale = little-endian
        f.write(np.ascontiguousarray(data[::-1]).tobytes())


def read_pfm(path: str | Path) -> np.ndarray:
    """Read a grayscale PFM into a float32 (H, W) array."""
    with open(path, "rb") as f:
        kind = f.readline().strip()
        if kind != b"Pf":
            raise ValidationError(f"{path}: only grayscale 'Pf' PFM is supported, got {kind!r}")
        w, h = (int(x) for x in f.readline().split())
        scale = float(f.readline())
        data = np.frombuffer(f.read(w * h * 4), dtype="<f4" if scale < 0 else ">f4")
    return data.reshape(h, w)[::-1].astype(np.float32)


# Depth PNGs store millimeters in 16 bits; 0 marks background.
DEPTH_PNG_SCALE = 1000.0


def write_depth_png(path: str | Path, depth_m: np.ndarray) -> None:
    """Encode depth in meters to a 16-bit PNG in millimeters (saturates at 65.535 m)."""
    mm = np.clip(np.round(np.asarray(depth_m, dtype=np.float64) * DEPTH_PNG_SCALE), 0, 65535)
    Image.fromarray(mm.astype(np.uint16)).save(path)  # mode I;16 inferred


def read_depth_png(path: str | Path) -> np.ndarray:
    """Decode a 16-bit depth PNG back to meters."""
    img = np.asarray(Image.open(path), dtype=np.float64)
    return img / DEPTH_PNG_SCALE


def write_rgb_png(path: str | Path, rgb: np.ndarray) -> None:
    Image.fromarray(np.asarray(rgb, dtype=np.uint8), mode="RGB").save(path)


def write_gray_png(path: str | Path, gray: np.ndarray) -> None:
    Image.fromarray(np.asarray(gray, dtype=np.uint8), mode="L").save(path)


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()
