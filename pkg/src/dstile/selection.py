"""Coverage-maximizing exemplar selection.

The objective is the weighted tiling of a query's components by the union of
the selected exemplars' components.  It is non-negative, monotone and
submodular, so greedy selection by marginal gain carries the
(1 - (1 - 1/k)^k) approximation guarantee; a brute-force enumerator provides
the exact optimum for small instances.

All weights are integers (granularity n per n-gram), so every gain and
comparison here is exact.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from dstile import kernels
from dstile.components import ComponentSet, weighted_intersection
from dstile.errors import OracleTooLargeError, SelectionError

DEFAULT_ORACLE_BUDGET = 10**6


@dataclass
class SelectionResult:
    """Ordered picks with their greedy trace and final coverage."""

    chosen: list[int]
    gains: list[int]
    tiling_ratio: float
    covered_weight: int
    query_weight: int
    strategy: str = "dst"

    def to_dict(self) -> dict:
        return {
            "chosen": list(self.chosen),
            "gains": list(self.gains),
            "tiling_ratio": self.tiling_ratio,
            "covered_weight": self.covered_weight,
            "query_weight": self.query_weight,
            "strategy": self.strategy,
        }


@dataclass
class QueryIndex:
    """Query components interned to dense integer ids, plus the per-exemplar
    overlap with the query in CSR form.  Built once per (database, query)."""

    weights: np.ndarray  # int64, weight of each query component id
    indptr: np.ndarray  # int64, CSR offsets per exemplar
    ids: np.ndarray  # int32, query-component ids overlapped by each exemplar
    total_weight: int
    n_exemplars: int = field(init=False)

    def __post_init__(self):
        self.n_exemplars = len(self.indptr) - 1

    def exemplar_ids(self, x: int) -> np.ndarray:
        return self.ids[self.indptr[x] : self.indptr[x + 1]]


def build_query_index(
    db_components: Sequence[ComponentSet], query: ComponentSet
) -> QueryIndex:
    id_of: dict[tuple[int, str], int] = {}
    weights: list[int] = []
    for n in query.granularities:
        for gram in sorted(query.per_n[n]):
            id_of[(n, gram)] = len(weights)
            weights.append(n)

    indptr = [0]
    flat_ids: list[int] = []
    for cs in db_components:
        if cs.granularities != query.granularities:
            raise ValueError(
                f"granularity mismatch: {cs.granularities} vs {query.granularities}"
            )
        overlap = []
        for n in query.granularities:
            for gram in cs.per_n[n] & query.per_n[n]:
                overlap.append(id_of[(n, gram)])
        overlap.sort()
        flat_ids.extend(overlap)
        indptr.append(len(flat_ids))

    return QueryIndex(
        weights=np.asarray(weights, dtype=np.int64),
        indptr=np.asarray(indptr, dtype=np.int64),
        ids=np.asarray(flat_ids, dtype=np.int32),
        total_weight=int(sum(weights)),
    )


def _check_indices(S, n: int) -> list[int]:
    out = []
    for i in S:
        if not 0 <= i < n:
            raise IndexError(f"exemplar index {i} out of range for database of {n}")
        out.append(i)
    return out


def tiling_ratio(
    S: Sequence[int], db_components: Sequence[ComponentSet], query: ComponentSet
) -> float:
    """Covered query weight over total query weight; 0 for an empty query."""
    idx = _check_indices(S, len(db_components))
    total = query.weighted_size()
    if total == 0:
        return 0.0
    covered = weighted_intersection([db_components[i] for i in idx], query)
    return covered / total


def marginal_gain(
    S: Sequence[int],
    x: int,
    db_components: Sequence[ComponentSet],
    query: ComponentSet,
) -> int:
    """Objective increase from adding ``x``: the weight of its query overlap
    not already covered by ``S``.  Exactly equals f(S ∪ {x}) - f(S)."""
    idx = _check_indices(S, len(db_components))
    _check_indices([x], len(db_components))
    if x in idx:
        raise ValueError(f"candidate {x} is already selected")
    gain = 0
    for n in query.granularities:
        target = query.per_n[n]
        covered: set[str] = set()
        for i in idx:
            covered |= db_components[i].per_n[n] & target
        gain += n * len((db_components[x].per_n[n] & target) - covered)
    return gain


def _greedy_naive(index: QueryIndex, k: int) -> tuple[list[int], list[int], np.ndarray]:
    covered = np.zeros(len(index.weights), dtype=np.uint8)
    chosen: list[int] = []
    gains: list[int] = []
    available = np.ones(index.n_exemplars, dtype=bool)
    while len(chosen) < k:
        step_gains = kernels.coverage_gains(index.indptr, index.ids, index.weights, covered)
        step_gains = np.where(available, step_gains, -1)
        best = int(np.argmax(step_gains))  # first max = lowest index
        best_gain = int(step_gains[best])
        if best_gain <= 0:
            break
        chosen.append(best)
        gains.append(best_gain)
        available[best] = False
        covered[index.exemplar_ids(best)] = 1
    return chosen, gains, covered


def _exemplar_gain(index: QueryIndex, covered: np.ndarray, x: int) -> int:
    ids = index.exemplar_ids(x)
    if len(ids) == 0:
        return 0
    return int(index.weights[ids][covered[ids] == 0].sum())


def _greedy_lazy(index: QueryIndex, k: int) -> tuple[list[int], list[int], np.ndarray]:
    """Priority-queue greedy over stale upper bounds; submodularity makes any
    stale gain an upper bound, so re-evaluating only the heap top is safe.
    Bit-identical to the naive scan under the (gain desc, index asc) order."""
    covered = np.zeros(len(index.weights), dtype=np.uint8)
    chosen: list[int] = []
    gains: list[int] = []
    initial = kernels.coverage_gains(index.indptr, index.ids, index.weights, covered)
    heap = [(-int(initial[x]), x, 0) for x in range(index.n_exemplars)]
    heapq.heapify(heap)
    step = 0
    while heap and len(chosen) < k:
        neg_gain, x, stamp = heapq.heappop(heap)
        if stamp != step:
            fresh = _exemplar_gain(index, covered, x)
            heapq.heappush(heap, (-fresh, x, step))
            continue
        gain = -neg_gain
        if gain <= 0:
            break
        chosen.append(x)
        gains.append(gain)
        covered[index.exemplar_ids(x)] = 1
        step += 1
    return chosen, gains, covered


def greedy_select(
    db_components: Sequence[ComponentSet],
    query: ComponentSet,
    k: int,
    *,
    fill_order: Sequence[int] | None = None,
    lazy: bool = False,
) -> SelectionResult:
    """Greedy maximization of covered query weight.

    Picks the argmax-marginal-gain exemplar each step (ties to the lowest
    index) and stops at capacity ``k`` or when no candidate adds coverage.
    ``fill_order`` (typically a text-relevance ranking such as BM25) pads the
    selection to exactly ``k`` after coverage is exhausted.
    """
    if k < 1:
        raise ValueError(f"capacity must be >= 1, got {k}")
    if not db_components:
        raise SelectionError("empty exemplar database")

    index = build_query_index(db_components, query)
    if lazy:
        chosen, gains, covered = _greedy_lazy(index, k)
    else:
        chosen, gains, covered = _greedy_naive(index, k)

    if fill_order is not None and len(chosen) < k:
        taken = set(chosen)
        for x in _check_indices(fill_order, index.n_exemplars):
            if len(chosen) >= k:
                break
            if x in taken:
                continue
            chosen.append(x)
            gains.append(_exemplar_gain(index, covered, x))
            covered[index.exemplar_ids(x)] = 1
            taken.add(x)

    covered_weight = int(index.weights[covered == 1].sum())
    ratio = covered_weight / index.total_weight if index.total_weight else 0.0
    return SelectionResult(
        chosen=chosen,
        gains=gains,
        tiling_ratio=ratio,
        covered_weight=covered_weight,
        query_weight=index.total_weight,
        strategy="dst",
    )


def brute_force_select(
    db_components: Sequence[ComponentSet],
    query: ComponentSet,
    k: int,
    *,
    budget: int = DEFAULT_ORACLE_BUDGET,
) -> SelectionResult:
    """Exact argmax of covered weight over all subsets of size <= k.

    Ties go to the lexicographically smallest index tuple.  Only usable when
    the subset count fits the budget.
    """
    if k < 1:
        raise ValueError(f"capacity must be >= 1, got {k}")
    if not db_components:
        raise SelectionError("empty exemplar database")

    n = len(db_components)
    cap = min(k, n)
    subset_count = sum(math.comb(n, j) for j in range(cap + 1))
    if subset_count > budget:
        raise OracleTooLargeError(
            f"{subset_count} subsets exceed the oracle budget of {budget}"
        )

    index = build_query_index(db_components, query)
    weights = index.weights
    bitmasks = []
    for x in range(n):
        mask = 0
        for cid in index.exemplar_ids(x):
            mask |= 1 << int(cid)
        bitmasks.append(mask)

    best_weight = 0
    best_tuple: tuple[int, ...] = ()

    def added_weight(mask: int) -> int:
        w = 0
        while mask:
            low = mask & -mask
            w += int(weights[low.bit_length() - 1])
            mask ^= low
        return w

    def recurse(start: int, prefix: tuple[int, ...], mask: int, weight: int) -> None:
        nonlocal best_weight, best_tuple
        if weight > best_weight or (weight == best_weight and prefix < best_tuple):
            best_weight = weight
            best_tuple = prefix
        if len(prefix) == cap:
            return
        for x in range(start, n):
            new_bits = bitmasks[x] & ~mask
            recurse(x + 1, prefix + (x,), mask | bitmasks[x], weight + added_weight(new_bits))

    recurse(0, (), 0, 0)

    ratio = best_weight / index.total_weight if index.total_weight else 0.0
    return SelectionResult(
        chosen=list(best_tuple),
        gains=[],
        tiling_ratio=ratio,
        covered_weight=best_weight,
        query_weight=index.total_weight,
        strategy="brute-force",
    )


def greedy_bound(k: int) -> float:
    """Approximation constant 1 - (1 - 1/k)^k for capacity k."""
    if k < 1:
        raise ValueError(f"capacity must be >= 1, got {k}")
    return 1.0 - (1.0 - 1.0 / k) ** k
