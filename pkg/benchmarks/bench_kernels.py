"""Timing comparison of the two scaling-sweep backends.

Runs the same log-domain sweep workload through the numba kernel and the
vectorized numpy fallback at a few problem sizes and prints a table of
per-sweep times plus the speedup. The first numba call pays JIT
compilation, so one warmup run per backend is excluded from timing.

Usage: python benchmarks/bench_kernels.py [--sizes 50x60,200x250] [--sweeps 400] [--repeats 5]
"""

import argparse
import time

import numpy as np

from rgw import _kernels


def parse_sizes(text):
    sizes = []
    for tok in text.split(","):
        n, m = tok.lower().split("x")
        sizes.append((int(n), int(m)))
    return sizes


def make_case(rng, n, m):
    logK = -rng.uniform(0.0, 50.0, size=(n, m))
    la = np.log(rng.dirichlet(np.ones(n)))
    lb = np.log(rng.dirichlet(np.ones(m)))
    return logK, la, lb, np.zeros(n), np.zeros(m)


def time_backend(fun, case, sweeps, repeats):
    logK, la, lb, lu0, lv0 = case
    fun(logK, la, lb, 0.9, 0.9, lu0, lv0, 0.0, 8)  # warmup / JIT
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fun(logK, la, lb, 0.9, 0.9, lu0, lv0, 0.0, sweeps)
        best = min(best, time.perf_counter() - start)
    return best / sweeps


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=parse_sizes, default=[(50, 60), (100, 120), (200, 250), (400, 500)])
    ap.add_argument("--sweeps", type=int, default=400)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    if not _kernels._HAVE_NUMBA:
        print("numba backend not importable; timing numpy only")

    rng = np.random.default_rng(0)
    print("%10s %14s %14s %9s" % ("size", "numpy/sweep", "numba/sweep", "speedup"))
    for n, m in args.sizes:
        case = make_case(rng, n, m)
        t_np = time_backend(_kernels._sweeps_numpy, case, args.sweeps, args.repeats)
        if _kernels._HAVE_NUMBA:
            t_nb = time_backend(_kernels._sweeps_numba, case, args.sweeps, args.repeats)
            print("%10s %12.2f us %12.2f us %8.1fx" % ("%dx%d" % (n, m), t_np * 1e6, t_nb * 1e6, t_np / t_nb))
        else:
            print("%10s %12.2f us %14s %9s" % ("%dx%d" % (n, m), t_np * 1e6, "-", "-"))


if __name__ == "__main__":
    main()
