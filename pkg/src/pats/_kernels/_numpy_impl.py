"""Pure-numpy implementations of the hot kernels.

These define the reference semantics; the numba twins in `_numba_impl`
mirror them loop-for-loop. Keep the two files in sync.
"""

from __future__ import annotations

import numpy as np

DESC_DIM = 40  # 16 intensity bins + 8 orientation bins + 4x4 thumbnail


def _logsumexp(m: np.ndarray, axis: int) -> np.ndarray:
    mx = np.max(m, axis=axis, keepdims=True)
    safe = np.where(np.isfinite(mx), mx, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(m - safe), axis=axis, keepdims=True)) + safe
    return np.squeeze(out, axis=axis)


def sinkhorn_log(
    logK: np.ndarray,
    loga: np.ndarray,
    logb: np.ndarray,
    a: np.ndarray,
    b: np.ndarray,
    f: np.ndarray,
    g: np.ndarray,
    max_iters: int,
    tol: float,
    check_every: int,
    omega: float = 1.0,
) -> tuple[int, float]:
    """Alternating log-domain scaling updates for the balanced problem.

    logK must be finite; loga/logb may contain -inf for zero marginals.
    f and g are the log scalings (plan = exp(f[:,None] + logK + g[None,:]))
    and are updated in place, so callers can warm-start across calls.
    `omega` in (0, 2) is the overrelaxation weight; 1 is the plain update,
    values above 1 damp the slow modes of near-saturated problems and keep
    the same fixed point. Returns (iterations_run, marginal_error); the
    error is refreshed every `check_every` iterations and on the final one.
    """
    err = np.inf
    it = 0
    for it in range(1, max_iters + 1):
        fn = loga - _logsumexp(logK + g[None, :], axis=1)
        if omega != 1.0:
            both = np.isfinite(fn) & np.isfinite(f)
            f[:] = np.where(both, f + omega * (fn - f), fn)
        else:
            f[:] = fn
        gn = logb - _logsumexp(logK + f[:, None], axis=0)
        if omega != 1.0:
            both = np.isfinite(gn) & np.isfinite(g)
            g[:] = np.where(both, g + omega * (gn - g), gn)
        else:
            g[:] = gn
        if it % check_every == 0 or it == max_iters:
            plan = np.exp(f[:, None] + logK + g[None, :])
            err = max(
                float(np.max(np.abs(plan.sum(axis=1) - a))),
                float(np.max(np.abs(plan.sum(axis=0) - b))),
            )
            if err <= tol or not np.isfinite(err):
                break
    return it, err


def bilinear_sample(
    img: np.ndarray, xs: np.ndarray, ys: np.ndarray, fill: float = 0.0
) -> tuple[np.ndarray, np.ndarray]:
    """Bilinear interpolation of `img` at continuous points (pixel-corner coords).

    Points inside [0, W] x [0, H] interpolate between pixel centers with
    border replication; points outside get `fill` and mask 0. Returns
    (values, mask) with the same shape as xs.
    """
    h, w = img.shape
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    inside = (xs >= 0.0) & (xs <= w) & (ys >= 0.0) & (ys <= h)
    u = xs - 0.5
    v = ys - 0.5
    j0 = np.floor(u)
    i0 = np.floor(v)
    fj = u - j0
    fi = v - i0
    j0c = np.clip(j0, 0, w - 1).astype(np.int64)
    j1c = np.clip(j0 + 1, 0, w - 1).astype(np.int64)
    i0c = np.clip(i0, 0, h - 1).astype(np.int64)
    i1c = np.clip(i0 + 1, 0, h - 1).astype(np.int64)
    vals = (1.0 - fi) * ((1.0 - fj) * img[i0c, j0c] + fj * img[i0c, j1c]) + fi * (
        (1.0 - fj) * img[i1c, j0c] + fj * img[i1c, j1c]
    )
    vals = np.where(inside, vals, fill)
    return vals, inside.astype(np.uint8)


def _normalize_rows(block: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(block, axis=1, keepdims=True)
    return np.divide(block, norms, out=np.zeros_like(block), where=norms > 1e-300)


def _center_normalize_rows(block: np.ndarray) -> np.ndarray:
    return _normalize_rows(block - block.mean(axis=1, keepdims=True))


def patch_descriptors(gray: np.ndarray, rows: int, cols: int, patch_size: int) -> np.ndarray:
    """40-dim descriptors for every patch of a regular grid over `gray`.

    Blocks: 16-bin intensity histogram; 8-bin gradient-orientation histogram
    weighted by gradient magnitude (patch-local central differences with
    replicated edges, so descriptors depend on patch content only); 4x4
    intensity thumbnail (exact block means when 4 | patch_size, else bilinear
    samples at block centers). Each block is mean-centered and L2-normalized
    (inner products become correlations, which keeps unrelated patches near
    cost zero), then the whole row is re-normalized. Flat patches keep zero
    gradient blocks; patches with no content at all (every sample zero, e.g.
    padding or masked-out regions) get the all-zero row so they cannot
    attract transport mass.
    """
    s = patch_size
    n = rows * cols
    tiles = (
        gray[: rows * s, : cols * s]
        .reshape(rows, s, cols, s)
        .transpose(0, 2, 1, 3)
        .reshape(n, s, s)
    )

    # intensity histogram
    bins = np.minimum((tiles * 16.0).astype(np.int64), 15).reshape(n, -1)
    offsets = np.arange(n)[:, None] * 16
    hist_i = np.bincount((bins + offsets).ravel(), minlength=n * 16).reshape(n, 16).astype(
        np.float64
    )

    # gradient orientation histogram, replicate-padded per tile
    padded = np.pad(tiles, ((0, 0), (1, 1), (1, 1)), mode="edge")
    gx = (padded[:, 1:-1, 2:] - padded[:, 1:-1, :-2]) * 0.5
    gy = (padded[:, 2:, 1:-1] - padded[:, :-2, 1:-1]) * 0.5
    mag = np.hypot(gx, gy).reshape(n, -1)
    ang = np.arctan2(gy, gx).reshape(n, -1)
    obins = (((ang + np.pi) / (np.pi / 4.0)).astype(np.int64)) % 8
    hist_g = np.zeros((n, 8))
    np.add.at(hist_g, (np.repeat(np.arange(n), s * s), obins.ravel()), mag.ravel())

    # 4x4 thumbnail
    if s % 4 == 0:
        k = s // 4
        thumb = tiles.reshape(n, 4, k, 4, k).mean(axis=(2, 4)).reshape(n, 16)
    else:
        centers = (np.arange(4) + 0.5) * s / 4.0
        px, py = np.meshgrid(centers, centers)
        u = px.ravel() - 0.5
        v = py.ravel() - 0.5
        j0 = np.floor(u).astype(np.int64)
        i0 = np.floor(v).astype(np.int64)
        fj = u - j0
        fi = v - i0
        j0c, j1c = np.clip(j0, 0, s - 1), np.clip(j0 + 1, 0, s - 1)
        i0c, i1c = np.clip(i0, 0, s - 1), np.clip(i0 + 1, 0, s - 1)
        thumb = (
            (1 - fi) * ((1 - fj) * tiles[:, i0c, j0c] + fj * tiles[:, i0c, j1c])
            + fi * ((1 - fj) * tiles[:, i1c, j0c] + fj * tiles[:, i1c, j1c])
        ).reshape(n, 16)

    out = np.concatenate(
        [
            _center_normalize_rows(hist_i),
            _center_normalize_rows(hist_g),
            _center_normalize_rows(thumb),
        ],
        axis=1,
    )
    out = _normalize_rows(out)
    out[tiles.max(axis=(1, 2)) == 0.0] = 0.0
    return out
