"""Ground-truth diagnostics: the three transport losses plus matching
precision / coverage / endpoint-error evaluation."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Correspondence, InvalidInputError, PatchGrid, TransportPlan
from .synth import GroundTruthWarp

__all__ = [
    "LossConfig",
    "EvalReport",
    "split_inlier_outlier",
    "outlier_loss",
    "inlier_loss",
    "concentration_loss",
    "evaluate",
]

_LOG_FLOOR = 1e-12  # keeps the outlier loss finite on empty plan cells


@dataclass(frozen=True)
class LossConfig:
    """`theta` is the inlier/outlier distance split, by default the patch
    size of the level being scored."""

    theta: float = 32.0

    def __post_init__(self):
        if not self.theta > 0:
            raise InvalidInputError("theta must be positive")


@dataclass(frozen=True)
class EvalReport:
    precision: float
    coverage: float
    mean_epe: float
    median_epe: float
    match_count: int
    loss_outlier: float
    loss_inlier: float
    loss_concentration: float
    plan_losses_available: bool = True

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _epe(corr: Correspondence, warp: GroundTruthWarp) -> float:
    truth = warp.apply(np.asarray(corr.source_pos))
    return float(math.hypot(corr.target_pos[0] - truth[0], corr.target_pos[1] - truth[1]))


def split_inlier_outlier(
    correspondences: Sequence[Correspondence],
    warp: GroundTruthWarp,
    config: LossConfig,
    target_grid: PatchGrid,
) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """Partition matches into inlier/outlier (i, j) pairs by distance error.

    j is the target patch whose cell contains the ground-truth position;
    error exactly theta counts as inlier. Matches whose truth falls outside
    the target grid are skipped (not co-visible at grid resolution).
    """
    inliers: list[tuple[int, int]] = []
    outliers: list[tuple[int, int]] = []
    s = target_grid.patch_size
    for corr in correspondences:
        truth = warp.apply(np.asarray(corr.source_pos))
        col = int(truth[0] // s)
        row = int(truth[1] // s)
        if not (0 <= row < target_grid.rows and 0 <= col < target_grid.cols):
            continue
        j = target_grid.rowcol_to_index(row, col)
        pair = (corr.source_index, j)
        if _epe(corr, warp) > config.theta:
            outliers.append(pair)
        else:
            inliers.append(pair)
    return inliers, outliers


def outlier_loss(plan: TransportPlan, outliers: Sequence[tuple[int, int]]) -> float:
    """Mean negative log of the mass on each outlier's ground-truth cell."""
    if not outliers:
        return 0.0
    real = plan.real_plan()
    total = 0.0
    for i, j in outliers:
        total -= math.log(max(real[i, j], _LOG_FLOOR))
    return total / len(outliers)


def inlier_loss(
    correspondences: Sequence[Correspondence],
    warp: GroundTruthWarp,
    inliers: Sequence[tuple[int, int]],
) -> float:
    """Mean squared endpoint error over the inlier set."""
    if not inliers:
        return 0.0
    by_source = {c.source_index: c for c in correspondences}
    total = 0.0
    for i, _ in inliers:
        corr = by_source[i]
        truth = warp.apply(np.asarray(corr.source_pos))
        total += (corr.target_pos[0] - truth[0]) ** 2 + (corr.target_pos[1] - truth[1]) ** 2
    return total / len(inliers)


def concentration_loss(
    plan: TransportPlan,
    correspondences: Sequence[Correspondence],
    inliers: Sequence[tuple[int, int]],
    target_grid: PatchGrid,
) -> float:
    """Mean mass an inlier source leaks to real targets outside its bbox."""
    if not inliers:
        return 0.0
    by_source = {c.source_index: c for c in correspondences}
    real = plan.real_plan()
    total = 0.0
    for i, _ in inliers:
        bbox = by_source[i].bbox
        inside = bbox.cell_indices(target_grid.cols)
        total += float(real[i].sum() - real[i, inside].sum())
    return total / len(inliers)


def _covisible_cells(
    warp: GroundTruthWarp,
    source_size: tuple[int, int],
    target_size: tuple[int, int],
    grid_n: int,
) -> np.ndarray:
    """Boolean (G, G) mask: cell counts as co-visible when its center is."""
    sw, sh = source_size
    tw, th = target_size
    cx = (np.arange(grid_n) + 0.5) * (sw / grid_n)
    cy = (np.arange(grid_n) + 0.5) * (sh / grid_n)
    xx, yy = np.meshgrid(cx, cy)
    centers = np.stack([xx.ravel(), yy.ravel()], axis=1)
    return warp.covisible(centers, tw, th).reshape(grid_n, grid_n)


def evaluate(
    correspondences: Sequence[Correspondence],
    warp: GroundTruthWarp,
    precision_threshold: float = 3.0,
    coverage_grid: int = 10,
    *,
    source_size: tuple[int, int],
    target_size: tuple[int, int],
    loss_config: LossConfig | None = None,
    plan: TransportPlan | None = None,
    target_grid: PatchGrid | None = None,
    coverage_epe_limit: float | None = None,
) -> EvalReport:
    """Score matches against the ground-truth warp.

    Precision and endpoint errors cover matches whose source point is
    co-visible; coverage is the fraction of co-visible G x G source cells
    holding at least one match. `coverage_epe_limit` restricts the counted
    matches to those within that endpoint error; the default (None) counts
    every match, which saturates once matches are dense regardless of their
    quality. The plan-dependent losses need `plan` and `target_grid`;
    without them they are reported as 0 with `plan_losses_available=False`.
    """
    sw, sh = source_size
    tw, th = target_size
    covis = [
        c
        for c in correspondences
        if warp.covisible(np.asarray(c.source_pos), tw, th)
        and 0 <= c.source_pos[0] <= sw
        and 0 <= c.source_pos[1] <= sh
    ]
    epes = np.array([_epe(c, warp) for c in covis]) if covis else np.empty(0)

    if len(covis):
        precision = float((epes <= precision_threshold).mean())
        mean_epe = float(epes.mean())
        median_epe = float(np.median(epes))
    else:
        precision = 0.0
        mean_epe = 0.0
        median_epe = 0.0

    cell_mask = _covisible_cells(warp, source_size, target_size, coverage_grid)
    hit = np.zeros_like(cell_mask)
    for c, epe in zip(covis, epes):
        if coverage_epe_limit is not None and epe > coverage_epe_limit:
            continue
        col = min(int(c.source_pos[0] / (sw / coverage_grid)), coverage_grid - 1)
        row = min(int(c.source_pos[1] / (sh / coverage_grid)), coverage_grid - 1)
        hit[row, col] = True
    n_covis_cells = int(cell_mask.sum())
    coverage = float((hit & cell_mask).sum() / n_covis_cells) if n_covis_cells else 0.0

    cfg = loss_config or LossConfig()
    inlier_sq = [e**2 for e in epes if e <= cfg.theta]
    loss_i = float(np.mean(inlier_sq)) if inlier_sq else 0.0
    loss_o = loss_c = 0.0
    plan_losses = plan is not None and target_grid is not None
    if plan_losses and correspondences:
        inliers, outliers = split_inlier_outlier(correspondences, warp, cfg, target_grid)
        loss_o = outlier_loss(plan, outliers)
        loss_c = concentration_loss(plan, correspondences, inliers, target_grid)

    return EvalReport(
        precision=precision,
        coverage=coverage,
        mean_epe=mean_epe,
        median_epe=median_epe,
        match_count=len(covis),
        loss_outlier=loss_o,
        loss_inlier=loss_i,
        loss_concentration=loss_c,
        plan_losses_available=plan_losses,
    )
