#!/usr/bin/env python3
"""Benchmark: compiled kernel vs numpy fallback on the hot kernels.

Times the capacity iteration and the mutual-information kernel on random
channels of several shapes, checks that both backends agree, and prints
a speedup table.

Usage: python3 benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from obfeval import _kernels_py

try:
    from obfeval import _kernels
except ImportError:
    _kernels = None

SHAPES = [(2, 2), (4, 4), (8, 8), (16, 16), (4, 256), (64, 64)]
TOL = 1e-9
MAX_ITER = 100_000


def random_rows(rng, m, n):
    rows = rng.random((m, n)) + 1e-3
    return np.ascontiguousarray(rows / rows.sum(axis=1, keepdims=True))


def best_time(fn, args, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if _kernels is None:
        print("compiled extension not built; run pip install -e . first")
        return 1

    rng = np.random.default_rng(2718)
    print(f"{'kernel':<22} {'shape':>9} {'compiled':>12} {'python':>12} {'speedup':>9}")
    for m, n in SHAPES:
        rows = random_rows(rng, m, n)

        lo_c, up_c, _, it_c, ok_c = _kernels.ba_iterate(rows, TOL, MAX_ITER)
        lo_p, up_p, _, it_p, ok_p = _kernels_py.ba_iterate(rows, TOL, MAX_ITER)
        assert ok_c and ok_p and abs(lo_c - lo_p) < 1e-7, "backends disagree"
        t_c = best_time(_kernels.ba_iterate, (rows, TOL, MAX_ITER), args.repeats)
        t_p = best_time(_kernels_py.ba_iterate, (rows, TOL, MAX_ITER), args.repeats)
        print(
            f"{'ba_iterate':<22} {f'{m}x{n}':>9} {t_c * 1e3:>10.3f}ms"
            f" {t_p * 1e3:>10.3f}ms {t_p / t_c:>8.1f}x"
            f"   ({it_c} iters)"
        )

        prior = rng.random(m) + 1e-3
        prior /= prior.sum()
        v_c = _kernels.mutual_information_bits(prior, rows)
        v_p = _kernels_py.mutual_information_bits(prior, rows)
        assert abs(v_c - v_p) < 1e-12, "backends disagree"
        reps = args.repeats * 200
        t_c = best_time(_kernels.mutual_information_bits, (prior, rows), reps)
        t_p = best_time(_kernels_py.mutual_information_bits, (prior, rows), reps)
        print(
            f"{'mutual_information':<22} {f'{m}x{n}':>9} {t_c * 1e6:>10.2f}us"
            f" {t_p * 1e6:>10.2f}us {t_p / t_c:>8.1f}x"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
