"""Entropic partial optimal transport with dustbins.

The partial problem (row sums <= source areas, column sums <= target areas)
is made balanced by appending a dustbin row and column: the source dustbin
carries capacity sum(target_areas) and the target dustbin sum(source_areas),
so any unmatched area has an escape route at `dustbin_cost`. The balanced
problem is solved with log-domain Sinkhorn scaling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import InvalidInputError, TransportPlan

__all__ = ["SinkhornConfig", "cost_matrix", "solve_transport", "augment_problem"]

# epsilon-scaling schedule: warm-start stages from _REG_START, halving down
# to the target regularization
_REG_START = 0.5
_STAGE_ITERS = 60
_CHECK_EVERY = 10


@dataclass(frozen=True)
class SinkhornConfig:
    """Solver knobs. `reg` is the entropic regularization strength.

    `epsilon_scaling` warm-starts the potentials through a decreasing
    regularization schedule (a bounded prelude that does not count against
    `max_iters`); the converged plan is the same fixed point either way.
    `overrelaxation` in [1, 2) damps the slow modes of saturated problems,
    again without moving the fixed point; a clear divergence triggers one
    plain-update retry.

    `dustbin_cost` is mildly negative by default: a cost-zero dustbin never
    beats zero-similarity content routes, so unmatched area would leak onto
    real targets and fake low-confidence matches; -0.3 sends routes with
    correlation under 0.3 to the dustbin instead.
    """

    reg: float = 0.02
    max_iters: int = 200
    marginal_tol: float = 1e-6
    dustbin_cost: float = -0.3
    epsilon_scaling: bool = True
    overrelaxation: float = 1.5

    def __post_init__(self):
        if not self.reg > 0:
            raise InvalidInputError("reg must be positive")
        if self.max_iters < 1:
            raise InvalidInputError("max_iters must be >= 1")
        if not self.marginal_tol > 0:
            raise InvalidInputError("marginal_tol must be positive")
        if not 1.0 <= self.overrelaxation < 2.0:
            raise InvalidInputError("overrelaxation must lie in [1, 2)")


def cost_matrix(source_desc: np.ndarray, target_desc: np.ndarray) -> np.ndarray:
    """Negative inner products between descriptor rows: C[i, j] = -(f_i . f_j)."""
    source_desc = np.asarray(source_desc, dtype=np.float64)
    target_desc = np.asarray(target_desc, dtype=np.float64)
    if source_desc.ndim != 2 or target_desc.ndim != 2:
        raise InvalidInputError("descriptor matrices must be 2D")
    if source_desc.shape[1] != target_desc.shape[1]:
        raise InvalidInputError(
            f"descriptor dimension mismatch: {source_desc.shape[1]} vs {target_desc.shape[1]}"
        )
    costs = -(source_desc @ target_desc.T)
    if not np.all(np.isfinite(costs)):
        raise InvalidInputError("cost matrix has non-finite entries")
    return costs


def augment_problem(
    costs: np.ndarray,
    source_areas: np.ndarray,
    target_areas: np.ndarray,
    dustbin_cost: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Append dustbin row/column making the partial problem balanced.

    Returns (augmented costs (N+1, M+1), row marginals, column marginals);
    total row mass equals total column mass by construction.
    """
    n, m = costs.shape
    c_aug = np.full((n + 1, m + 1), dustbin_cost, dtype=np.float64)
    c_aug[:n, :m] = costs
    a_aug = np.concatenate([source_areas, [target_areas.sum()]])
    b_aug = np.concatenate([target_areas, [source_areas.sum()]])
    return c_aug, a_aug, b_aug


def _reg_schedule(reg: float, enabled: bool) -> list[float]:
    if not enabled or reg >= _REG_START:
        return [reg]
    stages = []
    r = _REG_START
    while r > 2.0 * reg:
        stages.append(r)
        r *= 0.5
    stages.append(reg)
    return stages


def solve_transport(
    costs: np.ndarray,
    source_areas: np.ndarray,
    target_areas: np.ndarray,
    config: SinkhornConfig | None = None,
    *,
    track_errors: bool = False,
) -> TransportPlan:
    """Solve the dustbin-augmented area transport problem.

    Non-convergence within `max_iters` is not an error: the plan is returned
    with `converged=False` and the achieved `marginal_error`, and the caller
    decides. `track_errors=True` records the marginal error after every
    iteration (and disables epsilon scaling so the trajectory is the plain
    Sinkhorn one).
    """
    if config is None:
        config = SinkhornConfig()
    costs = np.asarray(costs, dtype=np.float64)
    a = np.asarray(source_areas, dtype=np.float64)
    b = np.asarray(target_areas, dtype=np.float64)
    if costs.ndim != 2 or costs.shape != (a.shape[0], b.shape[0]):
        raise InvalidInputError(
            f"costs shape {costs.shape} does not match areas ({a.shape[0]}, {b.shape[0]})"
        )
    if not np.all(np.isfinite(costs)):
        raise InvalidInputError("cost matrix has non-finite entries")
    if np.any(a < 0) or np.any(b < 0):
        raise InvalidInputError("areas must be non-negative")
    if a.sum() <= 0 or b.sum() <= 0:
        raise InvalidInputError("each side needs at least one positive area")

    c_aug, a_aug, b_aug = augment_problem(costs, a, b, config.dustbin_cost)
    with np.errstate(divide="ignore"):
        loga = np.log(a_aug)
        logb = np.log(b_aug)

    total_iters = 0
    history: list[float] = []

    def _run(omega: float) -> tuple[np.ndarray, np.ndarray, int, float]:
        f = np.zeros_like(a_aug)
        g = np.zeros_like(b_aug)
        iters = 0
        err = np.inf
        stages = _reg_schedule(config.reg, config.epsilon_scaling)
        warm_tol = max(config.marginal_tol, 1e-3)
        prev_reg: float | None = None
        for reg in stages[:-1]:
            if prev_reg is not None:
                # dual potentials alpha = reg * f stay continuous across stages
                scale = prev_reg / reg
                f *= scale
                g *= scale
            logK = -c_aug / reg
            it, _ = _kernels.sinkhorn_log(
                logK, loga, logb, a_aug, b_aug, f, g, _STAGE_ITERS, warm_tol, _CHECK_EVERY, omega
            )
            iters += it
            prev_reg = reg
        if prev_reg is not None:
            scale = prev_reg / config.reg
            f *= scale
            g *= scale
        logK = -c_aug / config.reg
        it, err = _kernels.sinkhorn_log(
            logK,
            loga,
            logb,
            a_aug,
            b_aug,
            f,
            g,
            config.max_iters,
            config.marginal_tol,
            _CHECK_EVERY,
            omega,
        )
        return f, g, iters + it, err

    if track_errors:
        # plain updates, error recorded every iteration
        f = np.zeros_like(a_aug)
        g = np.zeros_like(b_aug)
        logK = -c_aug / config.reg
        err = np.inf
        for _ in range(config.max_iters):
            it, err = _kernels.sinkhorn_log(
                logK, loga, logb, a_aug, b_aug, f, g, 1, -1.0, 1, 1.0
            )
            total_iters += it
            history.append(err)
            if err <= config.marginal_tol:
                break
    else:
        f, g, total_iters, err = _run(config.overrelaxation)
        diverged = not np.isfinite(err) or err > 0.5 * max(a_aug.max(), b_aug.max())
        if config.overrelaxation != 1.0 and diverged:
            # overrelaxation blew up: fall back to the plain update once
            f, g, total_iters, err = _run(1.0)

    logK = -c_aug / config.reg
    plan = np.exp(f[:, None] + logK + g[None, :])
    marginal_error = max(
        float(np.max(np.abs(plan.sum(axis=1) - a_aug))),
        float(np.max(np.abs(plan.sum(axis=0) - b_aug))),
    )
    return TransportPlan(
        plan=plan,
        source_areas=a,
        target_areas=b,
        marginal_error=marginal_error,
        converged=marginal_error <= config.marginal_tol,
        iterations=total_iters,
        error_history=tuple(history) if track_errors else None,
    )
