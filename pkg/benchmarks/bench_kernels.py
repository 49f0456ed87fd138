#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Run after installing the package:

    python benchmarks/bench_kernels.py [--n 1000000] [--m 10] [--repeat 3]

Backends are imported directly so both can be timed in one process; the
outputs are also cross-checked for equality.
"""

import argparse
import time

import numpy as np

from rankdp._kernels import _numpy

try:
    from rankdp._kernels import _fast
except ImportError:
    _fast = None


def bench(label, fn, *args, repeat=3):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=1_000_000, help="batch rows")
    parser.add_argument("--m", type=int, default=10, help="items per ranking")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    n, m = args.n, args.m
    order = rng.permutation(m).astype(np.int64)
    codes = np.stack(
        [rng.integers(0, t, size=n) for t in range(2, m + 1)], axis=1
    ).astype(np.int64)
    ref = (rng.permutation(m) + 1).astype(np.int64)

    print(f"n={n} m={m} repeat={args.repeat}")
    header = f"{'kernel':<24}{'numpy':>12}{'compiled':>12}{'speedup':>10}"
    print(header)
    print("-" * len(header))

    batch = _numpy.decode_insertion_codes(order, codes)
    cases = [
        ("decode_insertion_codes", (order, codes)),
        ("concordance_counts", (ref, batch)),
        ("pair_greater_counts", (batch,)),
    ]
    for name, call_args in cases:
        t_np, out_np = bench(name, getattr(_numpy, name), *call_args, repeat=args.repeat)
        if _fast is None:
            print(f"{name:<24}{t_np:>10.3f}s{'n/a':>12}{'':>10}")
            continue
        t_c, out_c = bench(name, getattr(_fast, name), *call_args, repeat=args.repeat)
        assert np.array_equal(out_np, out_c), f"{name}: backend mismatch"
        print(f"{name:<24}{t_np:>10.3f}s{t_c:>10.3f}s{t_np / t_c:>9.1f}x")

    if _fast is None:
        print("\ncompiled backend unavailable; install with a working C toolchain")


if __name__ == "__main__":
    main()
