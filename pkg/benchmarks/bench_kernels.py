"""Time the compiled Hankel kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N] [--csv out.csv]
"""

from __future__ import annotations

import argparse
import csv
import sys
import timeit

import numpy as np

from hankelrecon import _fallback

try:
    from hankelrecon import _core
except ImportError:
    _core = None

KERNELS = ("hankel_times", "hankel_h_times", "lowrank_antidiag_mean", "antidiag_mean")
SIZES = ((31, 2), (63, 5), (127, 10), (255, 20), (511, 20))


def _args(name, length, rank, rng):
    n1 = (length + 2) // 2
    n2 = length + 1 - n1
    x = rng.standard_normal(length) + 1j * rng.standard_normal(length)
    if name == "hankel_times":
        return x, rng.standard_normal((n2, rank)) + 1j * rng.standard_normal((n2, rank)), n1
    if name == "hankel_h_times":
        return x, rng.standard_normal((n1, rank)) + 1j * rng.standard_normal((n1, rank)), n2
    if name == "lowrank_antidiag_mean":
        p = rng.standard_normal((n1, rank)) + 1j * rng.standard_normal((n1, rank))
        q = rng.standard_normal((n2, rank)) + 1j * rng.standard_normal((n2, rank))
        return p, q
    return (rng.standard_normal((n1, n2)) + 1j * rng.standard_normal((n1, n2)),)


def best_of(func, args, repeat):
    number = max(1, int(2000 / (1 + args[0].size)))
    return min(timeit.repeat(lambda: func(*args), number=number, repeat=repeat)) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--csv")
    args = parser.parse_args(argv)
    if _core is None:
        print("compiled extension not built; only the fallback is timed", file=sys.stderr)
    rng = np.random.default_rng(0)
    rows = []
    for name in KERNELS:
        for length, rank in SIZES:
            a = _args(name, length, rank, rng)
            t_py = best_of(getattr(_fallback, name), a, args.repeat)
            t_c = best_of(getattr(_core, name), a, args.repeat) if _core else float("nan")
            if _core:
                diff = np.max(np.abs(getattr(_core, name)(*a) - getattr(_fallback, name)(*a)))
                assert diff < 1e-10, (name, length, diff)
            rows.append((name, length, rank, t_c * 1e6, t_py * 1e6, t_py / t_c))
            print(f"{name:24s} L={length:4d} R={rank:3d}  compiled {t_c * 1e6:9.1f} us"
                  f"  fallback {t_py * 1e6:9.1f} us  speedup {t_py / t_c:5.2f}x")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("kernel", "length", "rank", "compiled_us", "fallback_us", "speedup"))
            w.writerows(rows)


if __name__ == "__main__":
    main()
