"""Benchmark the compiled kernels against the pure-numpy/Python fallbacks.

    python benchmarks/bench_kernels.py

Covers the two hot loops: per-candidate coverage gains (the inner loop of
greedy tiling) and character edit distance (the LDSIM baseline).  Also times
an end-to-end greedy selection under both backends via DSTILE_PURE_PYTHON.
"""

from __future__ import annotations

import os
import random
import subprocess
import sys
import time

import numpy as np


def time_call(fn, *args, repeat: int = 5) -> float:
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bench_coverage_gains():
    from dstile import kernels

    if kernels._speedups is None:
        print("coverage_gains: extension not built, skipping compiled timing")
        return
    rng = np.random.default_rng(0)
    n_cand, n_ids, per_cand = 100_000, 5_000, 24
    ids = rng.integers(0, n_ids, size=n_cand * per_cand).astype(np.int32)
    indptr = (np.arange(n_cand + 1) * per_cand).astype(np.int64)
    weights = rng.choice([2, 4, 8, 16, 32], size=n_ids).astype(np.int64)
    covered = (rng.random(n_ids) < 0.5).astype(np.uint8)

    compiled = time_call(kernels._speedups.coverage_gains, indptr, ids, weights, covered)
    pure = time_call(kernels.coverage_gains_pure, indptr, ids, weights, covered)
    check = np.array_equal(
        kernels._speedups.coverage_gains(indptr, ids, weights, covered),
        kernels.coverage_gains_pure(indptr, ids, weights, covered),
    )
    print(
        f"coverage_gains  {n_cand} candidates x {per_cand} ids: "
        f"compiled {compiled * 1e3:8.2f} ms   pure {pure * 1e3:8.2f} ms   "
        f"speedup {pure / compiled:5.1f}x   equal={check}", flush=True
    )


def bench_levenshtein():
    from dstile import kernels

    if kernels._speedups is None:
        print("levenshtein: extension not built, skipping compiled timing")
        return
    rng = random.Random(1)
    pairs = [
        (
            "".join(rng.choice("abcdefgh ") for _ in range(300)),
            "".join(rng.choice("abcdefgh ") for _ in range(300)),
        )
        for _ in range(20)
    ]

    def run(fn):
        return [fn(a, b) for a, b in pairs]

    compiled = time_call(run, kernels._speedups.levenshtein, repeat=3)
    pure = time_call(run, kernels.levenshtein_pure, repeat=3)
    check = run(kernels._speedups.levenshtein) == run(kernels.levenshtein_pure)
    print(
        f"levenshtein     20 pairs of 300 chars:             "
        f"compiled {compiled * 1e3:8.2f} ms   pure {pure * 1e3:8.2f} ms   "
        f"speedup {pure / compiled:5.1f}x   equal={check}", flush=True
    )


GREEDY_SNIPPET = """
import random, time
from dstile import kernels
from dstile.components import component_set
from dstile.selection import greedy_select

rng = random.Random(7)
words = [f"w{i}" for i in range(60)]
specs = [" ".join(rng.choice(words) for _ in range(40)) for _ in range(3000)]
db = [component_set(s, (2, 4, 8)) for s in specs]
query = component_set(" ".join(rng.choice(words) for _ in range(60)), (2, 4, 8))
start = time.perf_counter()
result = greedy_select(db, query, 8)
elapsed = time.perf_counter() - start
print(f"  backend={kernels.BACKEND:8s} greedy k=8 over 3000 exemplars: "
      f"{elapsed * 1e3:7.1f} ms  ratio={result.tiling_ratio:.3f} chosen={result.chosen}")
"""


def bench_greedy_end_to_end():
    print("greedy_select end to end (selection identical across backends):", flush=True)
    for pure in ("", "1"):
        env = dict(os.environ, DSTILE_PURE_PYTHON=pure)
        subprocess.run([sys.executable, "-c", GREEDY_SNIPPET], env=env, check=True)


if __name__ == "__main__":
    bench_coverage_gains()
    bench_levenshtein()
    bench_greedy_end_to_end()
