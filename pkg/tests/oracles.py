"""Independent oracles the tests check the implementation against.

These deliberately avoid the library's own code paths: the transport oracle
is an exact LP solve, the trim oracle a brute-force enumeration.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog


def lp_transport_oracle(
    costs_aug: np.ndarray, row_marginals: np.ndarray, col_marginals: np.ndarray
) -> tuple[float, np.ndarray]:
    """Exact minimum-cost solution of the balanced transport LP.

    Equality-constrained linear program over the full (n x m) plan; returns
    (optimal cost, optimal plan).
    """
    n, m = costs_aug.shape
    assert abs(row_marginals.sum() - col_marginals.sum()) < 1e-9, "problem must be balanced"
    a_eq = np.zeros((n + m, n * m))
    for i in range(n):
        a_eq[i, i * m : (i + 1) * m] = 1.0
    for j in range(m):
        a_eq[n + j, j::m] = 1.0
    b_eq = np.concatenate([row_marginals, col_marginals])
    res = linprog(
        c=costs_aug.ravel(),
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=(0, None),
        method="highs",
    )
    assert res.success, res.message
    return float(res.fun), res.x.reshape(n, m)


def brute_force_trim(candidates):
    """Reference trimming: scan every (cell, candidate) pair exhaustively.

    candidates: iterable of objects with .cell, .owner and .corr.confidence.
    Returns {cell: winning candidate} keeping the max-confidence candidate,
    ties to the smallest owner.
    """
    cells = sorted({c.cell for c in candidates})
    winners = {}
    for cell in cells:
        pool = [c for c in candidates if c.cell == cell]
        best = pool[0]
        for cand in pool[1:]:
            if cand.corr.confidence > best.corr.confidence or (
                cand.corr.confidence == best.corr.confidence and cand.owner < best.owner
            ):
                best = cand
        winners[cell] = best
    return winners
