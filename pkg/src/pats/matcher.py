"""Correspondence extraction from a transport plan.

Per source patch: pick the target patch holding the most mass, flood-fill
the feasible region around it, take its axis-aligned bounding box, and place
the match at the sqrt-mass weighted expectation of the box's patch centers.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .core import (
    BBox,
    Correspondence,
    CorrespondenceSet,
    InvalidInputError,
    PatchGrid,
    TransportPlan,
)
from .ot import SinkhornConfig, cost_matrix, solve_transport
from .subdivision import area_expectation, scale_factor

__all__ = [
    "MatcherConfig",
    "argmax_target",
    "flood_region",
    "extract_correspondence",
    "match_grids",
]

_ZERO_AREA_FLOOR = 1e-12


@dataclass(frozen=True)
class MatcherConfig:
    """`flood_threshold` is the feasibility cutoff on transported mass;
    matches whose bbox receives less than `min_confidence` are discarded."""

    flood_threshold: float = 1e-5
    min_confidence: float = 0.1

    def __post_init__(self):
        if not self.flood_threshold > 0:
            raise InvalidInputError("flood_threshold must be positive")


def argmax_target(plan: TransportPlan, i: int) -> int | None:
    """Real target column holding the most of source row i's mass.

    Ties break to the smallest index; None when the row carries no mass on
    real targets (everything went to the dustbin).
    """
    if not 0 <= i < plan.n_sources:
        raise InvalidInputError(f"source index {i} out of range")
    row = plan.real_plan()[i]
    j = int(np.argmax(row))
    if row[j] <= 0.0:
        return None
    return j


def flood_region(
    plan: TransportPlan,
    i: int,
    seed: int,
    target_grid_shape: tuple[int, int],
    config: MatcherConfig | None = None,
) -> set[int]:
    """Maximal 4-connected component of feasible targets containing `seed`.

    Feasible means plan[i, j] >= flood_threshold; connectivity is over the
    target grid's row/column adjacency (diagonals excluded).
    """
    if config is None:
        config = MatcherConfig()
    rows, cols = target_grid_shape
    if rows * cols != plan.n_targets:
        raise InvalidInputError("target grid shape does not match plan")
    row = plan.real_plan()[i]
    if row[seed] < config.flood_threshold:
        raise InvalidInputError(f"seed {seed} is not feasible for source {i}")
    feasible = row >= config.flood_threshold
    seen = {seed}
    queue = deque([seed])
    while queue:
        j = queue.popleft()
        r, c = divmod(j, cols)
        for rr, cc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            if 0 <= rr < rows and 0 <= cc < cols:
                jj = rr * cols + cc
                if jj not in seen and feasible[jj]:
                    seen.add(jj)
                    queue.append(jj)
    return seen


def extract_correspondence(
    plan: TransportPlan,
    i: int,
    source_grid: PatchGrid,
    target_grid: PatchGrid,
    config: MatcherConfig | None = None,
) -> Correspondence | str:
    """Correspondence for source patch i, or a reason string when unmatched.

    The expectation runs over every patch inside the bbox, including
    sub-threshold ones, with weights sqrt(plan[i, j] / a_j).
    """
    if config is None:
        config = MatcherConfig()
    if plan.n_sources != source_grid.n_patches or plan.n_targets != target_grid.n_patches:
        raise InvalidInputError("grids are inconsistent with the plan")
    seed = argmax_target(plan, i)
    if seed is None:
        return "all mass in dustbin"
    row = plan.real_plan()[i]
    if row[seed] < config.flood_threshold:
        return "all mass below flood threshold"
    region = flood_region(plan, i, seed, (target_grid.rows, target_grid.cols), config)
    rr = [j // target_grid.cols for j in region]
    cc = [j % target_grid.cols for j in region]
    bbox = BBox(min(rr), min(cc), max(rr), max(cc))
    members = bbox.cell_indices(target_grid.cols)

    masses = row[members]
    areas = target_grid.areas[members]
    flags: list[str] = []
    if np.any((areas <= 0) & (masses > 0)):
        flags.append("zero_area_member")
    weights = np.sqrt(masses / np.maximum(areas, _ZERO_AREA_FLOOR))
    total_w = weights.sum()
    if total_w <= 0.0:
        return "zero expectation weight"
    target_pos = (weights / total_w) @ target_grid.positions[members]

    confidence = float(masses.sum())
    if confidence < config.min_confidence:
        return f"confidence {confidence:.4g} below threshold"
    ahat = area_expectation(plan, i, bbox, target_grid)
    if ahat is None or ahat <= 0.0:
        return "zero area expectation"
    gamma = scale_factor(float(source_grid.areas[i]), ahat)

    sx, sy = source_grid.positions[i]
    return Correspondence(
        source_index=i,
        source_pos=(float(sx), float(sy)),
        target_pos=(float(target_pos[0]), float(target_pos[1])),
        bbox=bbox,
        scale=gamma,
        confidence=confidence,
        level=source_grid.level,
        flags=tuple(flags),
    )


def match_grids(
    source_grid: PatchGrid,
    target_grid: PatchGrid,
    ot_config: SinkhornConfig | None = None,
    matcher_config: MatcherConfig | None = None,
) -> CorrespondenceSet:
    """Full single-level matching: cost matrix, transport solve, extraction."""
    if source_grid.descriptors.shape[1] == 0 or target_grid.descriptors.shape[1] == 0:
        raise InvalidInputError("grids must carry descriptors; run describe_patches first")
    costs = cost_matrix(source_grid.descriptors, target_grid.descriptors)
    plan = solve_transport(costs, source_grid.areas, target_grid.areas, ot_config)
    warnings: tuple[str, ...] = ()
    if not plan.converged:
        warnings = (
            f"transport solve did not converge: marginal error {plan.marginal_error:.3g}",
        )
    matched = []
    unmatched: dict[int, str] = {}
    for i in range(source_grid.n_patches):
        result = extract_correspondence(plan, i, source_grid, target_grid, matcher_config)
        if isinstance(result, Correspondence):
            matched.append(result)
        else:
            unmatched[i] = result
    return CorrespondenceSet(
        level=source_grid.level,
        correspondences=tuple(matched),
        unmatched=unmatched,
        warnings=warnings,
        plan=plan,
    )
