#!/usr/bin/env python3
"""Benchmark the compiled kernel backend against the pure-Python fallback.

Times the mixture-table kernel directly (both backends in-process) and a
full descent run end to end (per backend, in a subprocess so the import-time
selection applies).  Run as ``python benchmarks/bench_backends.py``.
"""

import os
import subprocess
import sys
import time

import numpy as np

from jlopt import _ncx2_py

try:
    from jlopt import _ncx2_cy
except ImportError:
    _ncx2_cy = None


def _time_kernel(mod, lo, hi, k, deltas, out, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        mod.tables_batch(lo, hi, k, deltas, out)
        best = min(best, time.perf_counter() - start)
    return best


def bench_kernel():
    rng = np.random.default_rng(0)
    print(f"{'workload':<38} {'python':>10} {'cython':>10} {'speedup':>8}")
    for n, k, dmax, label in [
        (100, 30, 40.0, "n=100 points, k=30, moderate delta"),
        (100, 30, 3e4, "n=100 points, k=30, large delta"),
        (20, 10, 20.0, "n=20 points, k=10, moderate delta"),
    ]:
        deltas = np.ascontiguousarray(rng.uniform(0.0, dmax, size=n))
        out = np.empty((n, 2, 9))
        lo, hi = 0.3 * k, 1.9 * k
        t_py = _time_kernel(_ncx2_py, lo, hi, k, deltas, out, repeats=5)
        if _ncx2_cy is None:
            print(f"{label:<38} {t_py * 1e3:>9.2f}ms {'n/a':>10} {'n/a':>8}")
            continue
        t_cy = _time_kernel(_ncx2_cy, lo, hi, k, deltas, out, repeats=20)
        print(f"{label:<38} {t_py * 1e3:>9.2f}ms {t_cy * 1e3:>9.2f}ms {t_py / t_cy:>7.1f}x")


_DESCENT_SNIPPET = """
import time
import jlopt

data = jlopt.make_unit_dataset(6, 8, seed=5)
ctx = jlopt.ObjectiveContext(data=data, k=4, eps=0.5)
cfg = jlopt.DescentConfig(rho=1e-4, mode="adaptive", max_iters=50000, seed=0)
start = time.perf_counter()
mean, trace = jlopt.hessian_descent(ctx, cfg)
elapsed = time.perf_counter() - start
print(f"{jlopt.backend_name()} {elapsed:.3f} {len(trace.records)}")
"""


def bench_descent():
    print()
    print("full descent run (n=6, d=8, k=4, eps=0.5):")
    for env_value, label in [("1", "python"), ("0", "cython")]:
        if env_value == "0" and _ncx2_cy is None:
            continue
        env = dict(os.environ, JLOPT_PURE_PYTHON=env_value)
        out = subprocess.run(
            [sys.executable, "-c", _DESCENT_SNIPPET],
            env=env, capture_output=True, text=True, check=True,
        )
        backend, elapsed, iters = out.stdout.split()
        print(f"  {label:<8} backend={backend:<8} {float(elapsed) * 1e3:8.1f}ms"
              f"  ({iters} iterations)")


if __name__ == "__main__":
    if _ncx2_cy is None:
        print("compiled backend not available; timing pure Python only")
    bench_kernel()
    bench_descent()
