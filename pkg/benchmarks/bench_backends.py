#!/usr/bin/env python3
"""Benchmark the compiled normal-generation kernel against the numpy
fallback, on raw generation and on an end-to-end paired risk run, and
confirm the two backends produce bit-identical output.

Usage: python benchmarks/bench_backends.py [--reps N] [--n N] [--p P]
"""

import argparse
import time

import numpy as np

from matshrink import kernels
from matshrink.estimators import EstimatorSpec
from matshrink.risk import paired_risk_difference
from matshrink.sampling import ModelSpec, SeedSpec


def _time(fn, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_generation(backend, count):
    key = SeedSpec(42).philox_key()
    blocks = (count + 3) // 4
    elapsed = _time(lambda: kernels.replicate_normals(
        key, blocks, 0, 1, count, backend=backend))
    return count / elapsed


def bench_end_to_end(backend, n, p, reps):
    model = ModelSpec(n=n, p=p, theta=np.zeros((n, p)))
    spec = EstimatorSpec("diagonal-js", a=1.0)
    elapsed = _time(lambda: paired_risk_difference(
        model, spec, reps, SeedSpec(42), backend=backend), repeat=2)
    return reps / elapsed


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=200_000)
    ap.add_argument("--n", type=int, default=6)
    ap.add_argument("--p", type=int, default=2)
    args = ap.parse_args()

    backends = kernels.available_backends()
    print(f"available backends: {', '.join(backends)}")
    if "cython" not in backends:
        print("compiled kernel not built; benchmarking fallback only")

    count = 4_000_000
    print(f"\nnormal generation ({count:,} draws):")
    rates = {}
    for b in backends:
        rates[b] = bench_generation(b, count)
        print(f"  {b:>7}: {rates[b] / 1e6:8.1f} M normals/s")

    print(f"\npaired risk difference (n={args.n}, p={args.p}, "
          f"reps={args.reps:,}):")
    for b in backends:
        rate = bench_end_to_end(b, args.n, args.p, args.reps)
        print(f"  {b:>7}: {rate / 1e6:8.2f} M replicates/s")

    if len(backends) == 2:
        key = SeedSpec(7).philox_key()
        a = kernels.replicate_normals(key, 4, 0, 10_000, 15, backend="cython")
        b = kernels.replicate_normals(key, 4, 0, 10_000, 15, backend="python")
        same = np.array_equal(a, b)
        print(f"\nbackends bit-identical on 150,000 shared draws: {same}")
        if not same:
            raise SystemExit(1)


if __name__ == "__main__":
    main()
