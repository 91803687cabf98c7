"""Numba-jitted twins of the kernels in `_numpy_impl`.

Same signatures and semantics; sequential loops keep each call
deterministic, and nogil lets the per-window thread pool overlap solves.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

DESC_DIM = 40


@njit(cache=True, nogil=True)
def sinkhorn_log(logK, loga, logb, a, b, f, g, max_iters, tol, check_every, omega=1.0):
    n, m = logK.shape
    err = np.inf
    it = 0
    for it in range(1, max_iters + 1):
        for i in range(n):
            mx = -np.inf
            for j in range(m):
                v = logK[i, j] + g[j]
                if v > mx:
                    mx = v
            ssum = 0.0
            for j in range(m):
                ssum += math.exp(logK[i, j] + g[j] - mx)
            fn = loga[i] - (math.log(ssum) + mx)
            if omega != 1.0 and np.isfinite(fn) and np.isfinite(f[i]):
                f[i] += omega * (fn - f[i])
            else:
                f[i] = fn
        for j in range(m):
            mx = -np.inf
            for i in range(n):
                v = logK[i, j] + f[i]
                if v > mx:
                    mx = v
            ssum = 0.0
            for i in range(n):
                ssum += math.exp(logK[i, j] + f[i] - mx)
            gn = logb[j] - (math.log(ssum) + mx)
            if omega != 1.0 and np.isfinite(gn) and np.isfinite(g[j]):
                g[j] += omega * (gn - g[j])
            else:
                g[j] = gn
        if it % check_every == 0 or it == max_iters:
            err = 0.0
            for i in range(n):
                rsum = 0.0
                for j in range(m):
                    rsum += math.exp(f[i] + logK[i, j] + g[j])
                d = abs(rsum - a[i])
                if d > err:
                    err = d
            for j in range(m):
                csum = 0.0
                for i in range(n):
                    csum += math.exp(f[i] + logK[i, j] + g[j])
                d = abs(csum - b[j])
                if d > err:
                    err = d
            if err <= tol or not np.isfinite(err):
                break
    return it, err


@njit(cache=True, nogil=True)
def bilinear_sample(img, xs, ys, fill=0.0):
    h, w = img.shape
    npts = xs.size
    vals = np.empty(npts, dtype=np.float64)
    mask = np.empty(npts, dtype=np.uint8)
    for k in range(npts):
        x = xs[k]
        y = ys[k]
        if x < 0.0 or x > w or y < 0.0 or y > h:
            vals[k] = fill
            mask[k] = 0
            continue
        u = x - 0.5
        v = y - 0.5
        j0 = math.floor(u)
        i0 = math.floor(v)
        fj = u - j0
        fi = v - i0
        j0c = min(max(int(j0), 0), w - 1)
        j1c = min(max(int(j0) + 1, 0), w - 1)
        i0c = min(max(int(i0), 0), h - 1)
        i1c = min(max(int(i0) + 1, 0), h - 1)
        vals[k] = (1.0 - fi) * ((1.0 - fj) * img[i0c, j0c] + fj * img[i0c, j1c]) + fi * (
            (1.0 - fj) * img[i1c, j0c] + fj * img[i1c, j1c]
        )
        mask[k] = 1
    return vals, mask


@njit(cache=True, nogil=True)
def _normalize_block(vec, lo, hi, center):
    if center:
        mean = 0.0
        for k in range(lo, hi):
            mean += vec[k]
        mean /= hi - lo
        for k in range(lo, hi):
            vec[k] -= mean
    ssum = 0.0
    for k in range(lo, hi):
        ssum += vec[k] * vec[k]
    if ssum > 1e-300:
        inv = 1.0 / math.sqrt(ssum)
        for k in range(lo, hi):
            vec[k] *= inv
    else:
        for k in range(lo, hi):
            vec[k] = 0.0


@njit(cache=True, nogil=True)
def patch_descriptors(gray, rows, cols, patch_size):
    s = patch_size
    n = rows * cols
    out = np.zeros((n, DESC_DIM), dtype=np.float64)
    for r in range(rows):
        for c in range(cols):
            idx = r * cols + c
            y0 = r * s
            x0 = c * s
            row = out[idx]

            content = 0.0
            for yy in range(s):
                for xx in range(s):
                    v = gray[y0 + yy, x0 + xx]
                    if v > content:
                        content = v
                    b = int(v * 16.0)
                    if b > 15:
                        b = 15
                    row[b] += 1.0
            if content == 0.0:  # no signal at all: stay all-zero
                for k in range(16):
                    row[k] = 0.0
                continue

            for yy in range(s):
                for xx in range(s):
                    xl = xx - 1 if xx > 0 else 0
                    xr = xx + 1 if xx < s - 1 else s - 1
                    yu = yy - 1 if yy > 0 else 0
                    yd = yy + 1 if yy < s - 1 else s - 1
                    gx = (gray[y0 + yy, x0 + xr] - gray[y0 + yy, x0 + xl]) * 0.5
                    gy = (gray[y0 + yd, x0 + xx] - gray[y0 + yu, x0 + xx]) * 0.5
                    mag = math.hypot(gx, gy)
                    ang = math.atan2(gy, gx)
                    ob = int((ang + math.pi) / (math.pi / 4.0)) % 8
                    row[16 + ob] += mag

            if s % 4 == 0:
                k = s // 4
                inv = 1.0 / (k * k)
                for br in range(4):
                    for bc in range(4):
                        acc = 0.0
                        for yy in range(br * k, (br + 1) * k):
                            for xx in range(bc * k, (bc + 1) * k):
                                acc += gray[y0 + yy, x0 + xx]
                        row[24 + br * 4 + bc] = acc * inv
            else:
                for br in range(4):
                    for bc in range(4):
                        u = (bc + 0.5) * s / 4.0 - 0.5
                        v = (br + 0.5) * s / 4.0 - 0.5
                        j0 = math.floor(u)
                        i0 = math.floor(v)
                        fj = u - j0
                        fi = v - i0
                        j0c = min(max(int(j0), 0), s - 1)
                        j1c = min(max(int(j0) + 1, 0), s - 1)
                        i0c = min(max(int(i0), 0), s - 1)
                        i1c = min(max(int(i0) + 1, 0), s - 1)
                        row[24 + br * 4 + bc] = (1.0 - fi) * (
                            (1.0 - fj) * gray[y0 + i0c, x0 + j0c]
                            + fj * gray[y0 + i0c, x0 + j1c]
                        ) + fi * (
                            (1.0 - fj) * gray[y0 + i1c, x0 + j0c]
                            + fj * gray[y0 + i1c, x0 + j1c]
                        )

            _normalize_block(row, 0, 16, True)
            _normalize_block(row, 16, 24, True)
            _normalize_block(row, 24, 40, True)
            _normalize_block(row, 0, 40, False)
    return out
