"""Kernel backend selection: compiled extension when built, numpy fallback.

Set ``DSTILE_PURE_PYTHON=1`` to force the fallback (used by the parity tests
and the benchmark).
"""

from __future__ import annotations

import os

import numpy as np

try:
    if os.environ.get("DSTILE_PURE_PYTHON"):
        _speedups = None
    else:
        from dstile import _speedups  # type: ignore[attr-defined]
except ImportError:
    _speedups = None

BACKEND = "compiled" if _speedups is not None else "pure"


def coverage_gains_pure(
    indptr: np.ndarray, ids: np.ndarray, weights: np.ndarray, covered: np.ndarray
) -> np.ndarray:
    """numpy fallback for the per-candidate uncovered-weight sums."""
    n_cand = len(indptr) - 1
    if len(ids) == 0:
        return np.zeros(n_cand, dtype=np.int64)
    contrib = np.where(covered[ids], 0, weights[ids])
    owner = np.repeat(np.arange(n_cand), np.diff(indptr))
    return np.bincount(owner, weights=contrib, minlength=n_cand).astype(np.int64)


def levenshtein_pure(a: str, b: str) -> int:
    """Two-row dynamic-programming edit distance."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        curr = [i] + [0] * len(b)
        for j, cb in enumerate(b, start=1):
            curr[j] = min(
                prev[j] + 1,
                curr[j - 1] + 1,
                prev[j - 1] + (ca != cb),
            )
        prev = curr
    return prev[-1]


if _speedups is not None:
    coverage_gains = _speedups.coverage_gains
    levenshtein = _speedups.levenshtein
else:
    coverage_gains = coverage_gains_pure
    levenshtein = levenshtein_pure
