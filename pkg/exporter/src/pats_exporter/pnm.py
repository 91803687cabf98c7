"""Minimal binary PGM/PPM reader (the exporter stays independent of the
matcher package; the shared surface is the PATS-DESC file format only)."""

from __future__ import annotations

from pathlib import Path

import numpy as np


def read_pnm(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if raw[:2] not in (b"P5", b"P6"):
        raise ValueError(f"{path}: unsupported format {raw[:2]!r}")
    channels = 1 if raw[:2] == b"P5" else 3
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        fields.append(int(raw[start:pos]))
    width, height, maxval = fields
    pos += 1
    bytes_per = 1 if maxval < 256 else 2
    dtype = np.uint8 if bytes_per == 1 else np.dtype(">u2")
    count = width * height * channels
    data = np.frombuffer(raw, dtype=dtype, count=count, offset=pos)
    arr = data.reshape(height, width, channels).astype(np.float64) / maxval
    return arr[:, :, 0] if channels == 1 else arr
