"""File formats: KSP1 complex rasters, IMGF float rasters, binary PGM
(8-bit masks, 16-bit image output), PNG input via Pillow, RFC-4180 CSV,
and JSON manifests.

Binary layouts (all integers little-endian unless noted):

    KSP1: magic "KSP1", u32 width, u32 height, then width*height
          (real, imag) float64 pairs, row-major.
    IMGF: magic "IMGF", u32 width, u32 height, then float64 values,
          row-major.

PGM follows Netpbm: P5 header, 255 = sampled for masks; 16-bit image
output uses maxval 65535 with big-endian samples, storing
round(value * 257) of the 0-255 scale so that 255.0 maps to full white.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .grids import as_image, as_kspace, as_mask


class FileFormatError(Exception):
    """Malformed or truncated data file."""


# ---------------------------------------------------------------------------
# KSP1 / IMGF rasters
# ---------------------------------------------------------------------------

def _write_raster(path, magic: bytes, data: np.ndarray) -> None:
    h, w = data.shape[:2]
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(np.asarray([w, h], dtype="<u4").tobytes())
        fh.write(data.tobytes())


def _read_raster(path, magic: bytes, dtype, scalars_per_cell: int) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(4)
        if head != magic:
            raise FileFormatError(f"{path}: bad magic {head!r}, expected {magic!r}")
        dims = fh.read(8)
        if len(dims) != 8:
            raise FileFormatError(f"{path}: truncated header")
        w, h = (int(x) for x in np.frombuffer(dims, dtype="<u4"))
        if w <= 0 or h <= 0:
            raise FileFormatError(f"{path}: invalid dimensions {w}x{h}")
        payload = fh.read()
    expected = w * h * scalars_per_cell * 8
    if len(payload) != expected:
        raise FileFormatError(
            f"{path}: payload is {len(payload)} bytes, expected {expected}")
    return np.frombuffer(payload, dtype=dtype).reshape(h, w)


def write_kspace(path, y) -> None:
    y = np.ascontiguousarray(as_kspace(y), dtype="<c16")
    _write_raster(path, b"KSP1", y)


def read_kspace(path) -> np.ndarray:
    return _read_raster(path, b"KSP1", "<c16", 2).astype(np.complex128)


def write_imgf(path, u) -> None:
    u = np.ascontiguousarray(as_image(u), dtype="<f8")
    _write_raster(path, b"IMGF", u)


def read_imgf(path) -> np.ndarray:
    return _read_raster(path, b"IMGF", "<f8", 1).astype(np.float64)


# ---------------------------------------------------------------------------
# PGM
# ---------------------------------------------------------------------------

def _pgm_tokens(fh):
    # yields whitespace-separated header tokens, skipping '#' comments
    while True:
        ch = fh.read(1)
        if not ch:
            raise FileFormatError("truncated PGM header")
        if ch.isspace():
            continue
        if ch == b"#":
            while ch not in (b"\n", b"\r", b""):
                ch = fh.read(1)
            continue
        token = ch
        while True:
            ch = fh.read(1)
            if not ch or ch.isspace():
                break
            token += ch
        yield token


def write_mask_pgm(path, mask) -> None:
    """8-bit P5 mask: 255 = sampled bin, 0 = unsampled."""
    mask = as_mask(mask)
    h, w = mask.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode())
        fh.write((mask.astype(np.uint8) * 255).tobytes())


def write_image_pgm16(path, u) -> None:
    """16-bit P5 image of 0-255 scale data (stored as round(u*257))."""
    u = as_image(u)
    h, w = u.shape
    scaled = np.clip(np.round(u * 257.0), 0, 65535).astype(">u2")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n65535\n".encode())
        fh.write(scaled.tobytes())


def read_pgm(path) -> np.ndarray:
    """Read a binary PGM into a 0-255 scale float array (16-bit data is
    divided by 257)."""
    with open(path, "rb") as fh:
        tokens = _pgm_tokens(fh)
        magic = next(tokens)
        if magic != b"P5":
            raise FileFormatError(f"{path}: not a binary PGM (magic {magic!r})")
        try:
            w, h, maxval = int(next(tokens)), int(next(tokens)), int(next(tokens))
        except ValueError as exc:
            raise FileFormatError(f"{path}: malformed PGM header") from exc
        if w <= 0 or h <= 0 or maxval <= 0 or maxval > 65535:
            raise FileFormatError(f"{path}: bad PGM dimensions/maxval {w} {h} {maxval}")
        # header terminator was the single whitespace consumed by the tokenizer
        nbytes = w * h * (2 if maxval > 255 else 1)
        payload = fh.read(nbytes)
    if len(payload) != nbytes:
        raise FileFormatError(f"{path}: truncated PGM payload")
    if maxval > 255:
        data = np.frombuffer(payload, dtype=">u2").astype(np.float64) / 257.0
    else:
        data = np.frombuffer(payload, dtype=np.uint8).astype(np.float64)
    return data.reshape(h, w)


def read_mask_pgm(path) -> np.ndarray:
    """Boolean mask from an 8-bit PGM (values >= 128 count as sampled)."""
    data = read_pgm(path)
    return as_mask(data >= 128.0)


# ---------------------------------------------------------------------------
# PNG and generic image input
# ---------------------------------------------------------------------------

def read_png(path) -> np.ndarray:
    from PIL import Image

    with Image.open(path) as img:
        if img.mode not in ("L", "I", "I;16"):
            img = img.convert("L")
        arr = np.asarray(img)
    if arr.dtype == np.uint8:
        return arr.astype(np.float64)
    # 16-bit grayscale comes in as uint16 or int32
    return arr.astype(np.float64) / 257.0


def write_png(path, u) -> None:
    from PIL import Image

    u = as_image(u)
    scaled = np.clip(np.round(u * 257.0), 0, 65535).astype(np.uint16)
    Image.fromarray(scaled).save(path)


def read_image(path) -> np.ndarray:
    """Load a grayscale image file (.pgm/.png/.imgf) on the 0-255 scale."""
    suffix = Path(path).suffix.lower()
    if suffix == ".pgm":
        return read_pgm(path)
    if suffix == ".png":
        return read_png(path)
    if suffix == ".imgf":
        return read_imgf(path)
    raise FileFormatError(f"{path}: unsupported image extension {suffix!r}")


# ---------------------------------------------------------------------------
# CSV and manifests
# ---------------------------------------------------------------------------

def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FileFormatError(f"{path}: empty CSV")
    return rows[0], rows[1:]


def write_manifest(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path) -> dict:
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"{path}: malformed JSON ({exc})") from exc
