"""Grid descriptor export: image -> extractor -> PATS-DESC file."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .extractors import make_extractor
from .format import grid_positions, write_desc_file
from .pnm import read_pnm


@dataclass(frozen=True)
class ExportSpec:
    image: str | Path
    patch_size: int
    out: str | Path
    model: str = "pool:32"
    unit_areas: bool = True  # False reserved for extractors that emit areas


def _normalize_rows(rows: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    return np.divide(rows, norms, out=np.zeros_like(rows), where=norms > 1e-12)


def export_descriptors(spec: ExportSpec) -> Path:
    """Run the extractor over the image grid and write a PATS-DESC file.

    The image must be an exact multiple of the patch size (the matcher pads
    its own inputs; exported files must match the padded grid the consumer
    will build). Any extractor shape mismatch aborts before a file exists.
    """
    gray = read_pnm(spec.image)
    if gray.ndim == 3:
        gray = gray.mean(axis=2)
    h, w = gray.shape
    s = spec.patch_size
    if w % s or h % s:
        raise ValueError(f"{spec.image}: {w}x{h} is not a multiple of patch size {s}")
    rows, cols = h // s, w // s
    n = rows * cols
    patches = gray.reshape(rows, s, cols, s).transpose(0, 2, 1, 3).reshape(n, s, s)

    extractor = make_extractor(spec.model)
    feats = np.asarray(extractor(patches))
    if feats.ndim != 2 or feats.shape[0] != n:
        raise ValueError(
            f"extractor {spec.model!r} returned shape {feats.shape}, expected ({n}, d)"
        )
    feats = _normalize_rows(feats.astype(np.float64))

    positions = grid_positions(w, h, s)
    areas = np.ones(n, dtype=np.float32)
    write_desc_file(spec.out, positions, areas, feats, s)
    return Path(spec.out)
