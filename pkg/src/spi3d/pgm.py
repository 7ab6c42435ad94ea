"""Binary PGM (P5) reading and writing for depth maps and fringe images.

Depth maps are stored as 16-bit PGM (maxval 65535, big-endian samples,
value = round(depth * 65535)); fringe images as 8-bit PGM (maxval 255,
value = round(intensity * 255)). Both are row-major per the PGM standard.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


def write_pgm(path: str | Path, values: np.ndarray, maxval: int) -> None:
    """Write a [0, 1] float image as a binary P5 PGM with the given maxval.

    maxval 255 emits one byte per sample; maxval 65535 emits big-endian
    16-bit samples.
    """
    if maxval not in (255, 65535):
        raise ValueError(f"maxval must be 255 or 65535, got {maxval}")
    vals = np.asarray(values, dtype=np.float64)
    if vals.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {vals.shape}")
    if not np.isfinite(vals).all() or vals.min() < 0.0 or vals.max() > 1.0:
        raise ValueError("image values must be finite and within [0, 1]")
    quant = np.floor(vals * maxval + 0.5).astype(np.uint32)
    h, w = vals.shape
    header = f"P5\n{w} {h}\n{maxval}\n".encode("ascii")
    if maxval == 255:
        payload = quant.astype(np.uint8).tobytes()
    else:
        payload = quant.astype(">u2").tobytes()
    Path(path).write_bytes(header + payload)


def read_pgm(path: str | Path) -> tuple[np.ndarray, int]:
    """Read a binary P5 PGM; returns ([0, 1] float64 image, maxval)."""
    raw = Path(path).read_bytes()
    if not raw.startswith(b"P5"):
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    # Header: magic, width, height, maxval as whitespace-separated tokens,
    # with '#' comment lines allowed before the raster.
    tokens: list[bytes] = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"{path}: truncated PGM header")
        tokens.append(raw[start:pos])
    pos += 1  # single whitespace byte after maxval
    w, h, maxval = (int(t) for t in tokens)
    if maxval not in (255, 65535):
        raise ValueError(f"{path}: unsupported maxval {maxval}")
    dtype = np.uint8 if maxval == 255 else np.dtype(">u2")
    count = h * w
    data = np.frombuffer(raw, dtype=dtype, count=count, offset=pos)
    if data.size != count:
        raise ValueError(f"{path}: truncated PGM raster")
    img = data.reshape(h, w).astype(np.float64) / maxval
    return img, maxval


def write_depth_pgm(path: str | Path, values: np.ndarray) -> None:
    """Persist a depth map as 16-bit PGM."""
    write_pgm(path, values, maxval=65535)


def write_fringe_pgm(path: str | Path, values: np.ndarray) -> None:
    """Persist a fringe image as 8-bit PGM."""
    write_pgm(path, values, maxval=255)
