"""Per-patch (descriptor, area) production.

Two descriptor backends: a deterministic handcrafted 40-dim feature
(histograms + thumbnail, see `_kernels.patch_descriptors`) and an import
path for externally computed features in PATS-DESC v1 files. Area backends:
unit, ground-truth warp Jacobians, or the same file format.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .core import DataFormatError, Image, InvalidInputError, PatchGrid
from .synth import GroundTruthWarp

__all__ = [
    "HANDCRAFTED_DIM",
    "DescriptorBackend",
    "AreaBackend",
    "DescFile",
    "describe_patches",
    "estimate_areas",
    "read_desc_file",
]

HANDCRAFTED_DIM = _kernels.DESC_DIM

_DESC_MAGIC = b"PATSDESC"
_DESC_VERSION = 1


@dataclass(frozen=True)
class DescriptorBackend:
    """kind: "handcrafted" (fixed d=40) or "file" (PATS-DESC v1 import)."""

    kind: str = "handcrafted"
    path: str | Path | None = None

    def __post_init__(self):
        if self.kind not in ("handcrafted", "file"):
            raise InvalidInputError(f"unknown descriptor backend {self.kind!r}")
        if self.kind == "file" and self.path is None:
            raise InvalidInputError("file descriptor backend needs a path")


@dataclass(frozen=True)
class AreaBackend:
    """kind: "unit", "ground_truth" (needs warp), or "file".

    `max_area` caps areas where the warp Jacobian is near singular; clamped
    patches are flagged on the grid.
    """

    kind: str = "unit"
    warp: GroundTruthWarp | None = None
    path: str | Path | None = None
    max_area: float = 16.0

    def __post_init__(self):
        if self.kind not in ("unit", "ground_truth", "file"):
            raise InvalidInputError(f"unknown area backend {self.kind!r}")
        if self.kind == "ground_truth" and self.warp is None:
            raise InvalidInputError("ground_truth area backend needs a warp")
        if self.kind == "file" and self.path is None:
            raise InvalidInputError("file area backend needs a path")


@dataclass(frozen=True)
class DescFile:
    """Parsed PATS-DESC v1 payload."""

    n: int
    dim: int
    patch_size: int
    positions: np.ndarray  # (N, 2)
    areas: np.ndarray  # (N,)
    descriptors: np.ndarray  # (N, d)


def read_desc_file(path: str | Path) -> DescFile:
    """Parse a PATS-DESC v1 file.

    Layout (little-endian): magic "PATSDESC", u32 version=1, u32 N, u32 d,
    u32 patch_size, f32 positions N x 2, f32 areas N, f32 descriptors N x d.
    """
    raw = Path(path).read_bytes()
    if len(raw) < 8 or raw[:8] != _DESC_MAGIC:
        raise DataFormatError(f"{path}: bad magic, not a PATS-DESC file", offset=0)
    if len(raw) < 24:
        raise DataFormatError(f"{path}: truncated header", offset=len(raw))
    version, n, dim, patch_size = struct.unpack_from("<IIII", raw, 8)
    if version != _DESC_VERSION:
        raise DataFormatError(f"{path}: unsupported version {version}", offset=8)
    expected = 24 + 4 * (2 * n) + 4 * n + 4 * (n * dim)
    if len(raw) != expected:
        raise DataFormatError(
            f"{path}: payload is {len(raw)} bytes, expected {expected}",
            offset=min(len(raw), expected),
        )
    off = 24
    positions = np.frombuffer(raw, dtype="<f4", count=2 * n, offset=off).reshape(n, 2)
    off += 8 * n
    areas = np.frombuffer(raw, dtype="<f4", count=n, offset=off)
    off += 4 * n
    descriptors = np.frombuffer(raw, dtype="<f4", count=n * dim, offset=off).reshape(n, dim)
    return DescFile(
        n=n,
        dim=dim,
        patch_size=patch_size,
        positions=positions.astype(np.float64),
        areas=areas.astype(np.float64),
        descriptors=descriptors.astype(np.float64),
    )


def _check_file_matches_grid(rec: DescFile, grid: PatchGrid, path) -> None:
    if rec.n != grid.n_patches:
        raise InvalidInputError(
            f"{path}: file has {rec.n} patches but grid has {grid.n_patches}"
        )
    if rec.patch_size != grid.patch_size:
        raise InvalidInputError(
            f"{path}: file patch size {rec.patch_size} != grid {grid.patch_size}"
        )


def _renormalize(rows: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    return np.divide(rows, norms, out=np.zeros_like(rows), where=norms > 1e-12)


def describe_patches(image: Image, grid: PatchGrid, backend: DescriptorBackend) -> PatchGrid:
    """Fill the grid's descriptor rows; every row comes out unit-norm or zero."""
    if backend.kind == "handcrafted":
        if grid.rows * grid.patch_size > image.height or grid.cols * grid.patch_size > image.width:
            raise InvalidInputError("grid does not fit inside the image")
        gray = np.ascontiguousarray(image.gray())
        desc = _kernels.patch_descriptors(gray, grid.rows, grid.cols, grid.patch_size)
        return grid.with_descriptors(desc)
    rec = read_desc_file(backend.path)
    _check_file_matches_grid(rec, grid, backend.path)
    return grid.with_descriptors(_renormalize(rec.descriptors))


def estimate_areas(grid: PatchGrid, backend: AreaBackend) -> PatchGrid:
    """Fill the grid's areas.

    ground_truth: a_j = 1 / |det J_w| with the Jacobian taken where the warp
    deposits content at the patch center, i.e. |det J_{w^-1}(p_j)| for the
    source-to-target warp w. Near-singular Jacobians clamp to `max_area` and
    flag the patch.
    """
    if backend.kind == "unit":
        return grid.with_areas(np.ones(grid.n_patches))
    if backend.kind == "ground_truth":
        inv = backend.warp.inverse()
        det = np.abs(inv.det_jacobian(grid.positions))
        flagged = tuple(int(i) for i in np.nonzero(det > backend.max_area)[0])
        return grid.with_areas(np.minimum(det, backend.max_area), flagged=flagged)
    rec = read_desc_file(backend.path)
    _check_file_matches_grid(rec, grid, backend.path)
    if np.any(rec.areas < 0):
        raise InvalidInputError(f"{backend.path}: negative areas")
    return grid.with_areas(rec.areas)
