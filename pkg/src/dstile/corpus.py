"""Exemplar database: ingestion, dedup, complexity scoring, tier partition
and test/database splits.

Corpus files are JSON-lines, one record per line:
``{"id": str, "spec": str, "code": str, "geometry_ref": str|null}``.
Records may carry an optional ``geom`` count (edges + faces of the ground
truth solid); without it the geometric term of the complexity score is 0 and
the exemplar is flagged.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from dstile.components import tokenize
from dstile.errors import CorpusParseError, EmptyCorpusError, PartitionError, SplitError

TIERS = ("Easy", "Middle", "Hard")

# Method names counted as executable CAD operations in exemplar code.
DEFAULT_CAD_OPS = (
    "box",
    "circle",
    "extrude",
    "cut",
    "union",
    "workplane",
    "polyline",
    "revolve",
)


@dataclass
class Exemplar:
    """One (design specification, CAD script) pair with optional geometry."""

    id: str
    spec: str
    code: str
    geometry_ref: str | None = None
    complexity: float | None = None
    geom: int | None = None  # edge+face count of the ground-truth solid

    def __post_init__(self):
        if not self.spec:
            raise ValueError(f"exemplar {self.id!r} has an empty spec")
        if self.complexity is not None and not self.complexity >= 0:
            raise ValueError(f"exemplar {self.id!r} has invalid complexity")


@dataclass
class Corpus:
    """Ordered exemplar list with optional tier labels."""

    exemplars: list[Exemplar]
    tier_labels: dict[str, str] = field(default_factory=dict)
    dedup_dropped: int = 0

    def __len__(self) -> int:
        return len(self.exemplars)

    def __iter__(self):
        return iter(self.exemplars)

    def __getitem__(self, i: int) -> Exemplar:
        return self.exemplars[i]

    def ids(self) -> list[str]:
        return [e.id for e in self.exemplars]

    def by_id(self, exemplar_id: str) -> Exemplar:
        for e in self.exemplars:
            if e.id == exemplar_id:
                return e
        raise KeyError(f"no exemplar with id {exemplar_id!r}")

    def specs(self) -> list[str]:
        return [e.spec for e in self.exemplars]


def ingest_corpus(path: str | Path, format: str = "jsonl") -> Corpus:
    """Read a corpus file, dropping later records whose spec duplicates an
    earlier one.  The number of dropped records is kept on the corpus."""
    if format != "jsonl":
        raise ValueError(f"unknown corpus format {format!r}")
    p = Path(path)
    exemplars: list[Exemplar] = []
    seen_specs: set[str] = set()
    seen_ids: set[str] = set()
    dropped = 0
    with p.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusParseError(line_no, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(record, dict):
                raise CorpusParseError(line_no, "record is not an object")
            for key in ("id", "spec", "code"):
                if key not in record:
                    raise CorpusParseError(line_no, f"missing field {key!r}")
            if record["id"] in seen_ids:
                raise CorpusParseError(line_no, f"duplicate id {record['id']!r}")
            if record["spec"] in seen_specs:
                dropped += 1
                continue
            seen_ids.add(record["id"])
            seen_specs.add(record["spec"])
            try:
                exemplars.append(
                    Exemplar(
                        id=str(record["id"]),
                        spec=record["spec"],
                        code=record["code"],
                        geometry_ref=record.get("geometry_ref"),
                        geom=record.get("geom"),
                    )
                )
            except ValueError as exc:
                raise CorpusParseError(line_no, str(exc)) from exc
    if not exemplars:
        raise EmptyCorpusError(f"no records in {p}")
    return Corpus(exemplars=exemplars, dedup_dropped=dropped)


def write_corpus(corpus: Corpus, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for e in corpus.exemplars:
            record = {"id": e.id, "spec": e.spec, "code": e.code, "geometry_ref": e.geometry_ref}
            if e.geom is not None:
                record["geom"] = e.geom
            fh.write(json.dumps(record) + "\n")


# ---------------------------------------------------------------------------
# Complexity scoring


@dataclass(frozen=True)
class ComplexityInputs:
    """Raw metrics behind the complexity score."""

    spec_len: int
    ops: int
    geom: int | None = None

    def __post_init__(self):
        if self.spec_len < 0 or self.ops < 0 or (self.geom is not None and self.geom < 0):
            raise ValueError(f"complexity inputs must be non-negative: {self}")


@dataclass(frozen=True)
class CorpusStats:
    """Per-metric (min, max) over the whole corpus."""

    spec_len: tuple[int, int]
    geom: tuple[int, int]
    ops: tuple[int, int]


def count_cad_ops(code: str, op_names: Sequence[str] = DEFAULT_CAD_OPS) -> int:
    """Occurrences of the configured CAD method names, called as methods."""
    pattern = re.compile(r"\.(%s)\s*\(" % "|".join(re.escape(op) for op in op_names))
    return len(pattern.findall(code))


def complexity_inputs(exemplar: Exemplar) -> ComplexityInputs:
    return ComplexityInputs(
        spec_len=len(tokenize(exemplar.spec)),
        ops=count_cad_ops(exemplar.code),
        geom=exemplar.geom,
    )


def corpus_stats(inputs: Iterable[ComplexityInputs]) -> CorpusStats:
    items = list(inputs)
    if not items:
        raise EmptyCorpusError("no complexity inputs")
    lens = [c.spec_len for c in items]
    ops = [c.ops for c in items]
    geoms = [c.geom for c in items if c.geom is not None]
    geom_range = (min(geoms), max(geoms)) if geoms else (0, 0)
    return CorpusStats(
        spec_len=(min(lens), max(lens)),
        geom=geom_range,
        ops=(min(ops), max(ops)),
    )


def _minmax(value: float, bounds: tuple[float, float]) -> float:
    lo, hi = bounds
    if hi == lo:
        return 0.0
    return (value - lo) / (hi - lo)


def complexity_score(inputs: ComplexityInputs, stats: CorpusStats) -> float:
    """Sum of the three min-max-normalized metrics; a missing geometry count
    contributes 0.  Result lies in [0, 3]."""
    score = _minmax(inputs.spec_len, stats.spec_len) + _minmax(inputs.ops, stats.ops)
    if inputs.geom is not None:
        score += _minmax(inputs.geom, stats.geom)
    return score


def score_corpus(corpus: Corpus) -> Corpus:
    """Attach a complexity score to every exemplar, in place."""
    all_inputs = [complexity_inputs(e) for e in corpus.exemplars]
    stats = corpus_stats(all_inputs)
    for exemplar, inputs in zip(corpus.exemplars, all_inputs):
        exemplar.complexity = complexity_score(inputs, stats)
    return corpus


# ---------------------------------------------------------------------------
# Tier partition and splits


def partition_tiers(corpus: Corpus) -> Corpus:
    """Label exemplars Easy/Middle/Hard by ascending complexity.

    Group sizes differ by at most one; a remainder goes to the earlier tiers.
    Ties order by id so the partition is reproducible.
    """
    n = len(corpus)
    if n < 3:
        raise PartitionError(f"need at least 3 exemplars to form tiers, got {n}")
    missing = [e.id for e in corpus.exemplars if e.complexity is None]
    if missing:
        raise PartitionError(f"exemplars without complexity scores: {missing[:5]}")
    ranked = sorted(corpus.exemplars, key=lambda e: (e.complexity, e.id))
    base, rem = divmod(n, 3)
    sizes = [base + (1 if t < rem else 0) for t in range(3)]
    labels: dict[str, str] = {}
    cursor = 0
    for tier, size in zip(TIERS, sizes):
        for e in ranked[cursor : cursor + size]:
            labels[e.id] = tier
        cursor += size
    corpus.tier_labels = labels
    return corpus


def split_test_set(
    corpus: Corpus, n_test: int, seed: int
) -> tuple[dict[str, list[str]], dict[str, list[str]]]:
    """Sample ``n_test`` ids per tier for the test set; the rest form the
    exemplar database.  Deterministic under ``seed``."""
    if not corpus.tier_labels:
        raise SplitError("corpus has no tier labels; run partition_tiers first")
    rng = random.Random(seed)
    test: dict[str, list[str]] = {}
    database: dict[str, list[str]] = {}
    for tier in TIERS:
        tier_ids = [e.id for e in corpus.exemplars if corpus.tier_labels.get(e.id) == tier]
        if n_test > len(tier_ids):
            raise SplitError(
                f"cannot sample {n_test} from tier {tier} of size {len(tier_ids)}"
            )
        picked = set(rng.sample(tier_ids, n_test))
        test[tier] = [i for i in tier_ids if i in picked]
        database[tier] = [i for i in tier_ids if i not in picked]
    return test, database
