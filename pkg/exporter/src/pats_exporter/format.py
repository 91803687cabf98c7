"""PATS-DESC v1 writer.

Layout (little-endian): magic "PATSDESC", u32 version=1, u32 N, u32 d,
u32 patch_size, f32 positions N x 2, f32 areas N, f32 descriptors N x d.
Positions follow the grid-center convention (col + 0.5) * s, (row + 0.5) * s
in row-major patch order.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"PATSDESC"
VERSION = 1


def grid_positions(width: int, height: int, patch_size: int) -> np.ndarray:
    """Row-major patch centers for a width x height image."""
    if width % patch_size or height % patch_size:
        raise ValueError(f"patch size {patch_size} does not divide {width}x{height}")
    cols = width // patch_size
    rows = height // patch_size
    cc, rr = np.meshgrid(np.arange(cols), np.arange(rows))
    return np.stack(
        [(cc.ravel() + 0.5) * patch_size, (rr.ravel() + 0.5) * patch_size], axis=1
    ).astype(np.float32)


def encode(positions: np.ndarray, areas: np.ndarray, descriptors: np.ndarray, patch_size: int) -> bytes:
    """Serialize one grid's worth of records; validates shapes first."""
    positions = np.ascontiguousarray(positions, dtype="<f4")
    areas = np.ascontiguousarray(areas, dtype="<f4")
    descriptors = np.ascontiguousarray(descriptors, dtype="<f4")
    n, d = descriptors.shape
    if positions.shape != (n, 2):
        raise ValueError(f"positions shape {positions.shape} does not match {n} descriptors")
    if areas.shape != (n,):
        raise ValueError(f"areas shape {areas.shape} does not match {n} descriptors")
    header = MAGIC + struct.pack("<IIII", VERSION, n, d, patch_size)
    return header + positions.tobytes() + areas.tobytes() + descriptors.tobytes()


def write_desc_file(
    path: str | Path,
    positions: np.ndarray,
    areas: np.ndarray,
    descriptors: np.ndarray,
    patch_size: int,
) -> None:
    """Write atomically: encode fully, then move into place, so a shape
    error can never leave a partial file behind."""
    blob = encode(positions, areas, descriptors, patch_size)
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(blob)
    tmp.replace(path)
