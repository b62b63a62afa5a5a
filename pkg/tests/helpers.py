"""Shared test utilities: synthetic corpora and independent oracles.

Oracles here recompute quantities from raw n-gram sets with plain Python so
they stay independent of the kernel-backed production paths.
"""

from __future__ import annotations

import random

from dstile.components import ComponentSet, component_set

WORDS = [
    "cylinder", "cube", "hole", "flange", "bracket", "plate", "rod", "slot",
    "fillet", "chamfer", "boss", "rib", "tray", "oval", "ring", "disk",
    "with", "and", "on", "through", "centered", "offset", "rounded", "tall",
]


def random_spec(rng: random.Random, min_len: int = 3, max_len: int = 12) -> str:
    length = rng.randint(min_len, max_len)
    return " ".join(rng.choice(WORDS) for _ in range(length))


def random_instance(
    rng: random.Random,
    n: int,
    granularities=(2, 4),
    min_len: int = 3,
    max_len: int = 12,
) -> tuple[list[ComponentSet], ComponentSet]:
    """A synthetic database of n component sets plus a query."""
    db = [
        component_set(random_spec(rng, min_len, max_len), granularities)
        for _ in range(n)
    ]
    query = component_set(random_spec(rng, max(min_len, 6), max_len + 4), granularities)
    return db, query


def oracle_covered_weight(sets, query) -> int:
    """Weighted size of (union of sets) ∩ query, straight from the raw sets."""
    total = 0
    for n in query.granularities:
        covered = set()
        for cs in sets:
            for gram in cs.per_n[n]:
                if gram in query.per_n[n]:
                    covered.add(gram)
        total += n * len(covered)
    return total


def oracle_f(S, db, query) -> int:
    return oracle_covered_weight([db[i] for i in S], query)
