"""Compare the compiled and numpy kernel backends.

Usage::

    python3 benchmarks/bench_kernels.py [--pairs 100000] [--repeat 3]

Prints best-of-``repeat`` wall time per (n, k) shape for orthonormalizing
two batches of Ginibre draws and computing both pair distances.
"""
import argparse
import time

import numpy as np

from grassmimo import kernels
from grassmimo.rng import SeededRng, complex_normal

SHAPES = [(2, 1), (8, 1), (4, 2), (8, 2), (6, 3), (8, 3), (8, 5), (16, 4)]


def run(backend, A1, A2):
    Q1 = backend.gram_schmidt(A1)
    Q2 = backend.gram_schmidt(A2)
    return backend.pair_distances_sq(Q1, Q2)


def best_time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    py = kernels.get_backend("python")
    try:
        cy = kernels.get_backend("cython")
    except ImportError:
        cy = None
        print("compiled backend not built; timing the numpy fallback only")

    print(f"{'n':>3} {'k':>3} {'python s':>10} {'cython s':>10} {'speedup':>8} {'max diff':>10}")
    for n, k in SHAPES:
        rng = SeededRng(1, n * 100 + k)
        A1 = complex_normal(rng, (args.pairs, n, k))
        A2 = complex_normal(rng, (args.pairs, n, k))
        t_py = best_time(lambda: run(py, A1, A2), args.repeat)
        if cy is None:
            print(f"{n:>3} {k:>3} {t_py:>10.3f}")
            continue
        t_cy = best_time(lambda: run(cy, A1, A2), args.repeat)
        diff = max(float(np.max(np.abs(a - b))) for a, b in zip(run(py, A1, A2), run(cy, A1, A2)))
        print(f"{n:>3} {k:>3} {t_py:>10.3f} {t_cy:>10.3f} {t_py / t_cy:>8.2f} {diff:>10.2e}")


if __name__ == "__main__":
    main()
