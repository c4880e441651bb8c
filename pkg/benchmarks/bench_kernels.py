#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy reference.

Times the two hot paths of parameter scans: batched sharp-edge matching
solves and transfer-matrix composition over many slices.  Run after
building the extension:

    python benchmarks/bench_kernels.py [--quick]
"""

import argparse
import time

import numpy as np

from toa_sim.kernels import available_backends, get_backend

MASS = 2.2069e-25
HBAR = 1.0545718e-34
GAMMA = 33.3e6


def timeit(fn, repeats=3):
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_sharp(backend, n_k, n_omega):
    k = MASS * np.linspace(5.0, 400.0, n_k) / HBAR
    omegas = np.linspace(0.5 * GAMMA, 10 * GAMMA, n_omega)

    def run():
        for omega in omegas:
            backend.sharp_edge_solve(k, GAMMA, omega, 5e-6, MASS, HBAR)

    return timeit(run), n_k * n_omega


def bench_transfer(backend, n_k, n_slices):
    k = MASS * np.linspace(5.0, 400.0, n_k) / HBAR
    edges = np.linspace(-0.28e-6, 5.28e-6, n_slices + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    omegas = 5 * GAMMA * 5e-6 * np.exp(-((mids - 2.5e-6) ** 2) / (2 * 0.529e-6**2)) / (
        0.529e-6 * np.sqrt(2 * np.pi)
    )

    def run():
        backend.transfer_solve(k, edges, omegas, GAMMA, MASS, HBAR)

    return timeit(run), n_k * n_slices


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="smaller problem sizes")
    args = parser.parse_args()

    # map-row regime: one kernel call per coupling value, short k batches
    cases = [
        ("sharp map rows", "sharp", (161, 250) if args.quick else (161, 1000)),
        ("sharp large batch", "sharp", (2000, 40) if args.quick else (4000, 100)),
        ("transfer 256 slices", "transfer", (400, 256) if args.quick else (1000, 256)),
    ]

    names = available_backends()
    print(f"available backends: {', '.join(names)}")
    results = {}
    for label, kind, size in cases:
        for name in names:
            backend = get_backend(name)
            if kind == "sharp":
                t, n = bench_sharp(backend, *size)
            else:
                t, n = bench_transfer(backend, *size)
            results[(label, name)] = t
            print(f"{label:>20} | {name:>9}: {n} units in {t:.3f} s ({n / t / 1e3:.0f} k/s)")
        if {"compiled", "python"} <= set(names):
            ratio = results[(label, "python")] / results[(label, "compiled")]
            print(f"{label:>20} | speedup compiled vs python: {ratio:.1f}x")


if __name__ == "__main__":
    main()
