"""Multi-granular n-gram component extraction from design specifications.

A specification is tokenized into words and decomposed into n-grams at
several window sizes.  Each n-gram ("component") carries weight n, so the
weighted size of a component set is ``sum(n * len(grams_n))``.  All matching
downstream is exact string matching per granularity; components of different
sizes never intersect.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

# Bump when tokenize() changes behaviour; part of the component-cache key.
TOKENIZER_VERSION = "1"

# Exponentially spaced window sizes, from word pairs to long phrases.
DEFAULT_GRANULARITIES: tuple[int, ...] = (2, 4, 8, 16, 32)


def _is_punctuation(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(spec: str) -> list[str]:
    """Lowercase, split on whitespace, strip punctuation off token edges.

    Interior punctuation survives, so numerals like "2.5" and words like
    "don't" stay intact.  Tokens that are pure punctuation are dropped.
    """
    tokens = []
    for raw in spec.lower().split():
        start, end = 0, len(raw)
        while start < end and _is_punctuation(raw[start]):
            start += 1
        while end > start and _is_punctuation(raw[end - 1]):
            end -= 1
        if end > start:
            tokens.append(raw[start:end])
    return tokens


def extract_ngrams(tokens: Sequence[str], n: int) -> frozenset[str]:
    """All distinct n-token windows, space-joined; empty when n exceeds length."""
    if n < 1:
        raise ValueError(f"window size must be >= 1, got {n}")
    if n > len(tokens):
        return frozenset()
    return frozenset(" ".join(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def check_granularities(granularities: Sequence[int]) -> tuple[int, ...]:
    sizes = tuple(granularities)
    if not sizes:
        raise ValueError("granularity set is empty")
    if any(n < 1 for n in sizes):
        raise ValueError(f"granularities must be >= 1: {sizes}")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError(f"granularities must be strictly increasing: {sizes}")
    return sizes


@dataclass(frozen=True)
class ComponentSet:
    """Per-granularity n-gram sets for one specification."""

    granularities: tuple[int, ...]
    per_n: Mapping[int, frozenset[str]] = field(hash=False)

    def weighted_size(self) -> int:
        return sum(n * len(self.per_n[n]) for n in self.granularities)

    def all_components(self) -> frozenset[str]:
        out: set[str] = set()
        for n in self.granularities:
            out |= self.per_n[n]
        return frozenset(out)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ComponentSet):
            return NotImplemented
        return self.granularities == other.granularities and all(
            self.per_n[n] == other.per_n[n] for n in self.granularities
        )


def component_set(
    spec: str, granularities: Sequence[int] = DEFAULT_GRANULARITIES
) -> ComponentSet:
    """Extract the component set of ``spec`` at every granularity."""
    sizes = check_granularities(granularities)
    tokens = tokenize(spec)
    return ComponentSet(
        granularities=sizes,
        per_n={n: extract_ngrams(tokens, n) for n in sizes},
    )


def _check_same_granularities(sets: Iterable[ComponentSet], query: ComponentSet) -> None:
    for cs in sets:
        if cs.granularities != query.granularities:
            raise ValueError(
                f"granularity mismatch: {cs.granularities} vs {query.granularities}"
            )


def weighted_intersection(sets: Sequence[ComponentSet], query: ComponentSet) -> int:
    """Weighted size of (union of ``sets``) ∩ ``query``, per granularity."""
    _check_same_granularities(sets, query)
    total = 0
    for n in query.granularities:
        covered: set[str] = set()
        target = query.per_n[n]
        for cs in sets:
            covered |= cs.per_n[n] & target
        total += n * len(covered)
    return total


# ---------------------------------------------------------------------------
# On-disk component cache


def save_component_cache(
    path: str | Path, components: Mapping[str, ComponentSet], granularities: Sequence[int]
) -> None:
    """Persist precomputed component sets as JSON keyed by exemplar id."""
    sizes = check_granularities(granularities)
    payload = {
        "tokenizer_version": TOKENIZER_VERSION,
        "granularities": list(sizes),
        "components": {
            key: {str(n): sorted(cs.per_n[n]) for n in sizes}
            for key, cs in components.items()
        },
    }
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_component_cache(
    path: str | Path, granularities: Sequence[int]
) -> dict[str, ComponentSet] | None:
    """Load a cache written by :func:`save_component_cache`.

    Returns None when the cache does not exist or was built with a different
    tokenizer version or granularity set.
    """
    p = Path(path)
    if not p.exists():
        return None
    payload = json.loads(p.read_text(encoding="utf-8"))
    sizes = check_granularities(granularities)
    if payload.get("tokenizer_version") != TOKENIZER_VERSION:
        return None
    if tuple(payload.get("granularities", ())) != sizes:
        return None
    out = {}
    for key, per_n in payload["components"].items():
        out[key] = ComponentSet(
            granularities=sizes,
            per_n={n: frozenset(per_n[str(n)]) for n in sizes},
        )
    return out
