#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure numpy fallbacks.

Runs each hot kernel on the same inputs through both backends and prints
a small table of timings plus the speedup.  The compiled backend must be
importable for a comparison; otherwise only the fallback is timed.

Usage: python3 benchmarks/bench_kernels.py [--n 2048] [--repeat 5]
"""

from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from hybridnet._kernels import BACKEND, pure
from hybridnet.graphs import gen_graph

try:
    from hybridnet._kernels import _speedups as compiled
except ImportError:
    compiled = None


def _time(fn, repeat: int) -> float:
    best = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best.append(time.perf_counter() - t0)
    return statistics.median(best)


def bench(n: int, repeat: int) -> None:
    g = gen_graph("random_connected", n, seed=7, weight_mode="uniform", W=8)
    indptr, nbrs, wgts = g.csr()
    k = max(4, int(round(n ** 0.5)))
    sources = np.arange(k, dtype=np.int64)
    hops = max(4, int(round(n ** 0.5)))

    words = (n + 63) // 64
    rng = np.random.default_rng(7)
    known = rng.integers(0, 2 ** 63, size=(n, words), dtype=np.uint64)
    newly = rng.integers(0, 2 ** 63, size=(n, words), dtype=np.uint64)
    eu, ev, _ = g.edge_arrays()

    cases = {
        "dijkstra_dist": lambda impl: impl.dijkstra_dist(indptr, nbrs, wgts, 0),
        "hop_limited_multisource": lambda impl: impl.hop_limited_multisource(
            indptr, nbrs, wgts, sources, hops
        ),
        "popcount_rows": lambda impl: impl.popcount_rows(known),
        "flood_round": lambda impl: impl.flood_round(indptr, nbrs, eu, ev, known, newly),
    }

    print(f"active backend: {BACKEND}   n={n}  m={g.m}  k={k}  hops={hops}")
    header = f"{'kernel':28s} {'pure (ms)':>12s} {'compiled (ms)':>14s} {'speedup':>9s}"
    print(header)
    print("-" * len(header))
    for name, call in cases.items():
        t_pure = _time(lambda: call(pure), repeat)
        if compiled is not None:
            t_comp = _time(lambda: call(compiled), repeat)
            ratio = t_pure / t_comp if t_comp > 0 else float("inf")
            print(f"{name:28s} {t_pure * 1e3:12.3f} {t_comp * 1e3:14.3f} {ratio:8.2f}x")
        else:
            print(f"{name:28s} {t_pure * 1e3:12.3f} {'n/a':>14s} {'n/a':>9s}")

    if compiled is not None:
        d0 = pure.dijkstra_dist(indptr, nbrs, wgts, 0)
        d1 = compiled.dijkstra_dist(indptr, nbrs, wgts, 0)
        assert np.array_equal(d0, d1), "backends disagree on dijkstra_dist"
        m0 = pure.hop_limited_multisource(indptr, nbrs, wgts, sources, hops)[0]
        m1 = compiled.hop_limited_multisource(indptr, nbrs, wgts, sources, hops)[0]
        assert np.array_equal(m0, m1), "backends disagree on hop_limited_multisource"
        print("cross-check: backends agree on sampled inputs")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=2048)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    bench(args.n, args.repeat)


if __name__ == "__main__":
    main()
