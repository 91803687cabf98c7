"""Benchmark the numba kernels against the pure-numpy fallback.

Runs itself twice in subprocesses (PATS_NUMBA=1 / PATS_NUMBA=0) because the
backend is chosen at import time, then prints a comparison table.

    python3 benchmarks/bench_kernels.py
"""

import json
import os
import subprocess
import sys
import time

import numpy as np

WORKLOADS = ["sinkhorn_145x145", "sinkhorn_65x65", "bilinear_256k", "descriptors_1k_patches"]


def run_workloads() -> dict:
    from pats import _kernels

    rng = np.random.default_rng(0)
    out = {"backend": _kernels.BACKEND}

    logk = rng.uniform(-40.0, 40.0, (146, 146))
    a = np.ones(146)
    loga = np.log(a)
    f = np.zeros(146)
    g = np.zeros(146)
    _kernels.sinkhorn_log(logk, loga, loga, a, a, f, g, 5, -1.0, 10, 1.0)  # warmup/jit
    t0 = time.perf_counter()
    f[:] = 0.0
    g[:] = 0.0
    _kernels.sinkhorn_log(logk, loga, loga, a, a, f, g, 200, -1.0, 10, 1.0)
    out["sinkhorn_145x145"] = time.perf_counter() - t0

    logk = rng.uniform(-40.0, 40.0, (66, 66))
    a = np.ones(66)
    loga = np.log(a)
    f = np.zeros(66)
    g = np.zeros(66)
    t0 = time.perf_counter()
    for _ in range(16):
        f[:] = 0.0
        g[:] = 0.0
        _kernels.sinkhorn_log(logk, loga, loga, a, a, f, g, 200, -1.0, 10, 1.0)
    out["sinkhorn_65x65"] = time.perf_counter() - t0

    img = rng.uniform(0, 1, (256, 256))
    xs = rng.uniform(-4, 260, 256 * 1024)
    ys = rng.uniform(-4, 260, 256 * 1024)
    _kernels.bilinear_sample(img, xs[:8], ys[:8])
    t0 = time.perf_counter()
    _kernels.bilinear_sample(img, xs, ys)
    out["bilinear_256k"] = time.perf_counter() - t0

    gray = rng.uniform(0, 1, (256, 256))
    _kernels.patch_descriptors(gray, 2, 2, 8)
    t0 = time.perf_counter()
    _kernels.patch_descriptors(gray, 32, 32, 8)
    out["descriptors_1k_patches"] = time.perf_counter() - t0
    return out


def main() -> int:
    if "--backend-run" in sys.argv:
        print(json.dumps(run_workloads()))
        return 0

    results = {}
    for flag, label in (("1", "numba"), ("0", "numpy")):
        env = dict(os.environ, PATS_NUMBA=flag)
        try:
            proc = subprocess.run(
                [sys.executable, __file__, "--backend-run"],
                capture_output=True,
                text=True,
                env=env,
                check=True,
            )
        except subprocess.CalledProcessError as exc:
            print(f"{label} backend unavailable: {exc.stderr.strip().splitlines()[-1]}")
            continue
        results[label] = json.loads(proc.stdout.strip().splitlines()[-1])

    if not results:
        return 1
    width = max(len(w) for w in WORKLOADS) + 2
    header = f"{'workload':<{width}}" + "".join(f"{lbl:>12}" for lbl in results)
    if len(results) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for w in WORKLOADS:
        row = f"{w:<{width}}"
        for lbl in results:
            row += f"{results[lbl][w] * 1e3:>10.2f}ms"
        if len(results) == 2:
            row += f"{results['numpy'][w] / results['numba'][w]:>9.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    sys.exit(main())
