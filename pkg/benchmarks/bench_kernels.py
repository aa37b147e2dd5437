#!/usr/bin/env python3
"""Time the numba kernels against the pure-numpy fallbacks.

Runs every hot kernel on representative problem sizes with both engines
and prints a table of per-call times and speedups.  Numbers include
neither JIT compilation (a warmup call is made first) nor data setup.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from factorlag import _kernels


def _best_of(fn, args, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def _lasso_problem(T, k, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((T, k))
    beta = np.zeros(k)
    beta[: k // 4] = rng.standard_normal(k // 4)
    y = X @ beta + rng.standard_normal(T)
    G = np.ascontiguousarray(X.T @ X / T)
    c = X.T @ y / T
    lam_max = np.abs(c).max()
    grid = lam_max * (1e-3 ** np.linspace(0.0, 1.0, 100))
    return G, c, grid


def bench_cd_path(impl, size):
    T, k = size
    G, c, grid = _lasso_problem(T, k)
    betas = np.empty((len(grid), k))
    deltas = np.empty(len(grid))

    def run():
        impl["cd_lasso_path"](G, c, grid, 100_000, 1e-8, betas, deltas)

    return run


def bench_cd_single(impl, size):
    T, k = size
    G, c, grid = _lasso_problem(T, k)
    lam = grid[len(grid) // 2]

    def run():
        beta = np.zeros(k)
        g = np.zeros(k)
        impl["cd_lasso_gram"](G, c, lam, beta, g, 100_000, 1e-8)

    return run


def bench_bartlett(impl, size):
    T, k = size
    S = np.ascontiguousarray(np.random.default_rng(1).standard_normal((T, k)))

    def run():
        impl["bartlett_lrv"](S, 6)

    return run


def bench_recursion(impl, size):
    T, m = size
    rng = np.random.default_rng(2)
    M = np.ascontiguousarray(np.diag(np.linspace(0.2, 0.7, m)))
    impulses = np.ascontiguousarray(rng.standard_normal((T, m)))

    def run():
        impl["linear_recursion"](M, impulses, np.zeros(m))

    return run


def bench_ar1(impl, size):
    T, n = size
    rng = np.random.default_rng(3)
    rho = np.full(n, 0.5)
    u = np.ascontiguousarray(rng.standard_normal((T, n)))

    def run():
        impl["ar1_filter"](rho, u)

    return run


BENCHES = [
    ("cd_lasso_path (T=464, k=200, 100 lambdas)", bench_cd_path, (464, 200)),
    ("cd_lasso_gram (T=464, k=200)", bench_cd_single, (464, 200)),
    ("bartlett_lrv (T=740, k=40, bw=6)", bench_bartlett, (740, 40)),
    ("linear_recursion (T=10500, m=16)", bench_recursion, (10500, 16)),
    ("ar1_filter (T=1500, n=200)", bench_ar1, (1500, 200)),
]


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    engines = {"numpy": _kernels._NUMPY_IMPL}
    try:
        engines["numba"] = _kernels._build_numba_impl()
    except ImportError:
        print("numba not importable; benchmarking the numpy engine only")

    width = max(len(name) for name, _, _ in BENCHES)
    header = f"{'kernel':<{width}}  " + "  ".join(f"{e:>10}" for e in engines)
    if len(engines) == 2:
        header += f"  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, factory, size in BENCHES:
        times = {}
        for engine, impl in engines.items():
            run = factory(impl, size)
            run()  # warmup / JIT
            times[engine] = _best_of(run, (), args.repeat)
        line = f"{name:<{width}}  " + "  ".join(
            f"{times[e] * 1e3:>8.2f}ms" for e in engines
        )
        if len(times) == 2:
            line += f"  {times['numpy'] / times['numba']:>7.1f}x"
        print(line)


if __name__ == "__main__":
    main()
