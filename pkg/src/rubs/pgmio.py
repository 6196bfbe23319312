"""Binary PGM (P5) images and raw float64 planes.

Two toy formats cover the CLI's needs:

* PGM P5 with maxval up to 65535; sample order row-major, 16-bit
  samples big-endian as the PNM convention demands.
* Raw planes: magic "RUF8", little-endian u32 width and height, then
  row-major little-endian float64 samples.  Lossless for filter
  outputs.

All writers go through an atomic temp-file replace so a failed write
never leaves a partial file.
"""

from __future__ import annotations

import struct

import numpy as np

from ._io import atomic_write_bytes

__all__ = [
    "read_pgm",
    "write_pgm",
    "read_raw_plane",
    "write_raw_plane",
    "quantize",
]

RAW_MAGIC = b"RUF8"


def _tokens(data: bytes):
    """PNM header tokens: whitespace separated, # comments to EOL."""
    i = 0
    n = len(data)
    while i < n:
        c = data[i : i + 1]
        if c == b"#":
            while i < n and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < n and not data[j : j + 1].isspace() and data[j : j + 1] != b"#":
                j += 1
            yield data[i:j], j
            i = j


def read_pgm(path):
    """Read a binary PGM.  Returns (samples, maxval).

    Samples come back as uint8 or uint16 with shape (height, width).
    """
    with open(path, "rb") as fh:
        data = fh.read()
    toks = _tokens(data)
    try:
        magic, _ = next(toks)
        if magic != b"P5":
            raise ValueError(f"not a binary PGM (magic {magic!r})")
        width, _ = next(toks)
        height, _ = next(toks)
        maxval, end = next(toks)
        width, height, maxval = int(width), int(height), int(maxval)
    except StopIteration:
        raise ValueError("truncated PGM header") from None
    if width <= 0 or height <= 0:
        raise ValueError("PGM dimensions must be positive")
    if not 0 < maxval < 65536:
        raise ValueError(f"PGM maxval {maxval} out of range")
    # Exactly one whitespace byte separates header and samples.
    start = end + 1
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    need = width * height * dtype.itemsize
    body = data[start : start + need]
    if len(body) != need:
        raise ValueError(f"PGM body has {len(body)} bytes, expected {need}")
    arr = np.frombuffer(body, dtype=dtype).reshape(height, width)
    if arr.max(initial=0) > maxval:
        raise ValueError("PGM sample exceeds declared maxval")
    return arr.astype(np.uint16 if maxval > 255 else np.uint8), maxval


def write_pgm(path, samples, maxval: int = 255) -> None:
    """Write integer samples as binary PGM (atomically)."""
    if not 0 < maxval < 65536:
        raise ValueError(f"PGM maxval {maxval} out of range")
    arr = np.asarray(samples)
    if arr.ndim != 2:
        raise ValueError("PGM samples must be 2-D")
    if not np.issubdtype(arr.dtype, np.integer):
        raise ValueError("PGM samples must be integers; quantize first")
    if arr.min(initial=0) < 0 or arr.max(initial=0) > maxval:
        raise ValueError("PGM samples out of [0, maxval]")
    h, w = arr.shape
    header = f"P5\n{w} {h}\n{maxval}\n".encode("ascii")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    atomic_write_bytes(path, header + arr.astype(dtype).tobytes())


def quantize(values, maxval: int = 255) -> np.ndarray:
    """Clip to [0, maxval] and round half to even, returning integers."""
    v = np.clip(np.asarray(values, dtype=np.float64), 0.0, float(maxval))
    out = np.rint(v).astype(np.uint16 if maxval > 255 else np.uint8)
    return out


def write_raw_plane(path, values) -> None:
    """Write a float64 plane with the RUF8 header (atomically)."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("raw plane must be 2-D")
    h, w = arr.shape
    header = RAW_MAGIC + struct.pack("<II", w, h)
    atomic_write_bytes(path, header + np.ascontiguousarray(arr, dtype="<f8").tobytes())


def read_raw_plane(path) -> np.ndarray:
    """Read a plane written by ``write_raw_plane``."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12 or data[:4] != RAW_MAGIC:
        raise ValueError("not a raw float plane (bad magic)")
    w, h = struct.unpack_from("<II", data, 4)
    need = 12 + 8 * w * h
    if w <= 0 or h <= 0 or len(data) != need:
        raise ValueError("raw plane header inconsistent with size")
    return np.frombuffer(data, "<f8", w * h, 12).reshape(h, w).copy()
