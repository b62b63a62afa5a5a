"""End-to-end experiment orchestration: select exemplars, prompt the model,
score the generated solids, and aggregate per-tier metrics.

All randomness is derived from named seeds in the config, and in replay mode
(cassette + stored generation results) a run is byte-reproducible: reports
serialize with sorted keys and repr-exact floats, carry no timestamps or
absolute paths, and queries are processed in sorted id order.
"""

from __future__ import annotations

import csv
import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import yaml

from dstile import baselines, selection
from dstile.bridge import STATUS_OK, TYPE_I, BridgeRunner, RunResult
from dstile.components import DEFAULT_GRANULARITIES, ComponentSet, component_set
from dstile.corpus import Corpus, ingest_corpus
from dstile.errors import DstileError
from dstile.gateway import Gateway, GatewayConfig
from dstile.geometry import GeometryArtifact, align_and_score, invalid_penalty
from dstile.prompting import STATUS_NO_BLOCK, build_prompt, extract_code
from dstile.selection import SelectionResult

MODE_METRICS_ONLY = "metrics-only"
MODE_LIVE_RUNNER = "live-runner"

FAILURE_TYPES = ("TypeI", "TypeII", "TypeIII")


@dataclass
class MetricConfig:
    resolution: int = 64
    surface_points: int = 4096
    edge_points: int = 1024


@dataclass
class ExperimentConfig:
    corpus_path: Path
    splits_path: Path
    gt_dir: Path
    out_dir: Path
    gateway: GatewayConfig
    gen_dir: Path | None = None
    runner_cmd: str | None = None
    mode: str = MODE_METRICS_ONLY
    strategy: str = "dst"
    k: int = 1
    tiers: tuple[str, ...] = ("Easy", "Middle", "Hard")
    seed: int = 0
    fill_to_k: bool = False
    granularities: tuple[int, ...] = DEFAULT_GRANULARITIES
    metric: MetricConfig = field(default_factory=MetricConfig)
    workers: int = 1
    run_timeout: float = 30.0

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be >= 0 (0 means zero-shot)")
        if self.mode not in (MODE_METRICS_ONLY, MODE_LIVE_RUNNER):
            raise ValueError(f"unknown harness mode {self.mode!r}")
        if self.mode == MODE_METRICS_ONLY and self.gen_dir is None:
            raise ValueError("metrics-only mode needs gen_dir with stored run results")
        if self.mode == MODE_LIVE_RUNNER and not self.runner_cmd:
            raise ValueError("live-runner mode needs runner_cmd")


def load_config(path: str | Path) -> ExperimentConfig:
    p = Path(path)
    raw = yaml.safe_load(p.read_text(encoding="utf-8"))
    base = p.parent

    def resolve(key: str, default=None):
        value = raw.get(key, default)
        return (base / value) if value is not None else None

    gw = raw.get("gateway", {})
    cassette = gw.get("cassette")
    gateway = GatewayConfig(
        base_url=gw.get("base_url", ""),
        model=gw.get("model", "stub"),
        temperature=float(gw.get("temperature", 0.0)),
        max_tokens=int(gw.get("max_tokens", 2048)),
        timeout=float(gw.get("timeout", 60.0)),
        max_retries=int(gw.get("max_retries", 3)),
        mode=gw.get("mode", "replay"),
        cassette_path=str(base / cassette) if cassette else None,
        concurrency=int(gw.get("concurrency", 4)),
    )
    metric_raw = raw.get("metric", {})
    metric = MetricConfig(
        resolution=int(metric_raw.get("resolution", 64)),
        surface_points=int(metric_raw.get("surface_points", 4096)),
        edge_points=int(metric_raw.get("edge_points", 1024)),
    )
    return ExperimentConfig(
        corpus_path=resolve("corpus"),
        splits_path=resolve("splits"),
        gt_dir=resolve("gt_dir"),
        gen_dir=resolve("gen_dir"),
        out_dir=resolve("out_dir", "out"),
        runner_cmd=raw.get("runner_cmd"),
        mode=raw.get("mode", MODE_METRICS_ONLY),
        strategy=raw.get("strategy", "dst"),
        k=int(raw.get("k", 1)),
        tiers=tuple(raw.get("tiers", ["Easy", "Middle", "Hard"])),
        seed=int(raw.get("seed", 0)),
        fill_to_k=bool(raw.get("fill_to_k", False)),
        granularities=tuple(raw.get("granularities", list(DEFAULT_GRANULARITIES))),
        metric=metric,
        workers=int(raw.get("workers", 1)),
        run_timeout=float(raw.get("run_timeout", 30.0)),
        gateway=gateway,
    )


def derive_seed(seed: int, label: str) -> int:
    """Stable per-query sub-seed; all stochastic selectors draw from these."""
    digest = hashlib.sha256(f"{seed}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


# ---------------------------------------------------------------------------
# Selection dispatch


def select_exemplars(
    strategy: str,
    db_components: Sequence[ComponentSet],
    db_specs: Sequence[str],
    query_components: ComponentSet,
    query_spec: str,
    k: int,
    seed: int,
    *,
    fill_to_k: bool = False,
) -> SelectionResult:
    if k == 0:
        return SelectionResult(
            chosen=[], gains=[], tiling_ratio=0.0, covered_weight=0,
            query_weight=query_components.weighted_size(), strategy="zero-shot",
        )
    if strategy == "dst":
        fill_order = baselines.bm25_ranking(db_specs, query_spec) if fill_to_k else None
        return selection.greedy_select(db_components, query_components, k, fill_order=fill_order)
    if strategy == "random":
        return baselines.select_random(
            len(db_specs), k, seed,
            db_components=db_components, query_components=query_components,
        )
    if strategy == "ldsim":
        return baselines.select_ldsim(
            db_specs, query_spec, k,
            db_components=db_components, query_components=query_components,
        )
    if strategy == "bm25":
        return baselines.select_bm25(
            db_specs, query_spec, k,
            db_components=db_components, query_components=query_components,
        )
    if strategy == "diversity":
        return baselines.select_diversity(
            db_specs, query_spec, k, seed=seed,
            db_components=db_components, query_components=query_components,
        )
    raise ValueError(f"unknown selection strategy {strategy!r}")


# ---------------------------------------------------------------------------
# Reports


@dataclass
class EvalRecord:
    query_id: str
    tier: str
    chosen_ids: list[str]
    gains: list[int]
    tiling_ratio: float
    extraction_status: str
    valid: bool
    failure_class: str | None
    iou: float
    cd: float
    ecd: float
    ecd_on_surface: bool

    def to_dict(self) -> dict:
        return {
            "query_id": self.query_id,
            "tier": self.tier,
            "chosen_ids": self.chosen_ids,
            "gains": self.gains,
            "tiling_ratio": self.tiling_ratio,
            "extraction_status": self.extraction_status,
            "valid": self.valid,
            "failure_class": self.failure_class,
            "iou": self.iou,
            "cd": self.cd,
            "ecd": self.ecd,
            "ecd_on_surface": self.ecd_on_surface,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvalRecord":
        return cls(**data)


@dataclass
class RunReport:
    strategy: str
    k: int
    seed: int
    records: list[EvalRecord]
    aggregates: dict
    failure_counts: dict

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "k": self.k,
            "seed": self.seed,
            "records": [r.to_dict() for r in self.records],
            "aggregates": self.aggregates,
            "failure_counts": self.failure_counts,
        }

    def to_bytes(self) -> bytes:
        return (
            json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")) + "\n"
        ).encode("utf-8")

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def from_dict(cls, data: dict) -> "RunReport":
        return cls(
            strategy=data["strategy"],
            k=data["k"],
            seed=data["seed"],
            records=[EvalRecord.from_dict(r) for r in data["records"]],
            aggregates=data["aggregates"],
            failure_counts=data["failure_counts"],
        )

    @classmethod
    def load(cls, path: str | Path) -> "RunReport":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _mean(values: list[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def aggregate_records(records: list[EvalRecord], tiers: Sequence[str]) -> dict:
    out = {}
    groups = {tier: [r for r in records if r.tier == tier] for tier in tiers}
    groups["All"] = list(records)
    for name, group in groups.items():
        if not group:
            continue
        out[name] = {
            "count": len(group),
            "vsr": sum(r.valid for r in group) / len(group),
            "mean_iou": _mean([r.iou for r in group]),
            "mean_cd": _mean([r.cd for r in group]),
            "mean_ecd": _mean([r.ecd for r in group]),
            "mean_tiling_ratio": _mean([r.tiling_ratio for r in group]),
        }
    return out


def count_failures(records: list[EvalRecord]) -> dict:
    counts = {t: 0 for t in FAILURE_TYPES}
    for r in records:
        if r.failure_class:
            counts[r.failure_class] += 1
    return counts


# ---------------------------------------------------------------------------
# The experiment loop


class Experiment:
    """Loads corpus/splits/artifacts once; reusable across shot counts."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.corpus: Corpus = ingest_corpus(config.corpus_path)
        splits = json.loads(Path(config.splits_path).read_text(encoding="utf-8"))
        self.test_ids: list[str] = sorted(
            qid for tier in config.tiers for qid in splits["test"].get(tier, [])
        )
        db_ids = {i for tier_ids in splits["database"].values() for i in tier_ids}
        self.db_exemplars = [e for e in self.corpus.exemplars if e.id in db_ids]
        self.db_specs = [e.spec for e in self.db_exemplars]
        self.db_codes = [e.code for e in self.db_exemplars]
        self.db_ids = [e.id for e in self.db_exemplars]
        self.db_components = [
            component_set(spec, config.granularities) for spec in self.db_specs
        ]
        self.tier_of = {
            qid: tier for tier, ids in splits["test"].items() for qid in ids
        }
        self.gateway = Gateway(config.gateway)
        self._gt_cache: dict[str, GeometryArtifact] = {}

    def ground_truth(self, query_id: str) -> GeometryArtifact:
        if query_id not in self._gt_cache:
            self._gt_cache[query_id] = GeometryArtifact.load(
                self.config.gt_dir / f"{query_id}.json"
            )
        return self._gt_cache[query_id]

    def stored_run_result(self, query_id: str) -> RunResult:
        path = self.config.gen_dir / f"{query_id}.json"
        return RunResult.from_dict(json.loads(path.read_text(encoding="utf-8")))

    def query_prompt(self, query_id: str, k: int):
        """Selection and prompt for one query; shared with fixture tooling so
        recorded cassettes stay aligned with the replay path."""
        cfg = self.config
        exemplar = self.corpus.by_id(query_id)
        query_components = component_set(exemplar.spec, cfg.granularities)
        sel = select_exemplars(
            cfg.strategy,
            self.db_components,
            self.db_specs,
            query_components,
            exemplar.spec,
            k,
            derive_seed(cfg.seed, query_id),
            fill_to_k=cfg.fill_to_k,
        )
        prompt = build_prompt(
            sel.chosen,
            self.db_specs,
            self.db_codes,
            exemplar.spec,
            include_examples_block=k > 0,
        )
        return sel, prompt

    def evaluate_query(
        self, query_id: str, k: int, runner: BridgeRunner | None = None
    ) -> EvalRecord:
        cfg = self.config
        sel, prompt = self.query_prompt(query_id, k)
        gt = self.ground_truth(query_id)

        failure_class: str | None = None
        run_result: RunResult | None = None
        try:
            raw = self.gateway.complete(prompt)
            code, status = extract_code(raw)
        except DstileError as exc:
            code, status = None, STATUS_NO_BLOCK
            raw = f"<gateway error: {exc}>"

        if code is None:
            failure_class = TYPE_I
        elif cfg.mode == MODE_METRICS_ONLY:
            run_result = self.stored_run_result(query_id)
        else:
            assert runner is not None
            run_result = runner.run(
                query_id,
                code,
                timeout=cfg.run_timeout,
                seed=derive_seed(cfg.seed, f"run:{query_id}"),
                surface_points=cfg.metric.surface_points,
                edge_points=cfg.metric.edge_points,
                resolution=cfg.metric.resolution,
            )

        if run_result is not None and run_result.status == STATUS_OK:
            artifact = GeometryArtifact.from_dict(run_result.artifact)
            metrics = align_and_score(artifact, gt, valid=True, resolution=cfg.metric.resolution)
        else:
            if run_result is not None:
                failure_class = run_result.failure_class or TYPE_I
            metrics = align_and_score(
                invalid_penalty(cfg.metric.resolution), gt,
                valid=False, resolution=cfg.metric.resolution,
            )

        return EvalRecord(
            query_id=query_id,
            tier=self.tier_of.get(query_id, "unknown"),
            chosen_ids=[self.db_ids[i] for i in sel.chosen],
            gains=list(sel.gains),
            tiling_ratio=sel.tiling_ratio,
            extraction_status=status,
            valid=metrics.vsr_valid,
            failure_class=failure_class,
            iou=metrics.iou,
            cd=metrics.cd,
            ecd=metrics.ecd,
            ecd_on_surface=metrics.ecd_on_surface,
        )

    def run(self, k: int | None = None) -> RunReport:
        cfg = self.config
        shots = cfg.k if k is None else k
        runner_ctx = (
            BridgeRunner(cfg.runner_cmd) if cfg.mode == MODE_LIVE_RUNNER else None
        )

        def eval_all(runner: BridgeRunner | None) -> list[EvalRecord]:
            if cfg.workers > 1 and runner is None:
                with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                    return list(
                        pool.map(lambda q: self.evaluate_query(q, shots), self.test_ids)
                    )
            return [self.evaluate_query(q, shots, runner) for q in self.test_ids]

        if runner_ctx is not None:
            with runner_ctx as runner:
                records = eval_all(runner)
        else:
            records = eval_all(None)

        records.sort(key=lambda r: r.query_id)
        return RunReport(
            strategy=cfg.strategy if shots > 0 else "zero-shot",
            k=shots,
            seed=cfg.seed,
            records=records,
            aggregates=aggregate_records(records, cfg.tiers),
            failure_counts=count_failures(records),
        )


def run_experiment(config: ExperimentConfig) -> RunReport:
    """Run one (strategy, k) cell end to end; stage errors become failure
    records, never batch aborts."""
    return Experiment(config).run()


def sweep_shots(config: ExperimentConfig, shots: Sequence[int]) -> dict[int, RunReport]:
    """One report per shot count, reusing the loaded corpus and artifacts."""
    experiment = Experiment(config)
    return {k: experiment.run(k) for k in shots}


def sweep_csv(reports: dict[int, RunReport], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["k", "tier", "count", "vsr", "mean_iou", "mean_cd", "mean_ecd", "mean_tiling_ratio"]
        )
        for k in sorted(reports):
            for tier, agg in sorted(reports[k].aggregates.items()):
                writer.writerow(
                    [k, tier, agg["count"], agg["vsr"], agg["mean_iou"],
                     agg["mean_cd"], agg["mean_ecd"], agg["mean_tiling_ratio"]]
                )


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float | None:
    """Pearson correlation; None when undefined (fewer than two points or a
    constant column)."""
    n = len(xs)
    if n < 2 or n != len(ys):
        return None
    mx = sum(xs) / n
    my = sum(ys) / n
    dx = [x - mx for x in xs]
    dy = [y - my for y in ys]
    sx = sum(d * d for d in dx) ** 0.5
    sy = sum(d * d for d in dy) ** 0.5
    if sx == 0 or sy == 0:
        return None
    return sum(a * b for a, b in zip(dx, dy)) / (sx * sy)


def correlation_report(reports: Sequence[RunReport]) -> dict:
    """Correlate mean tiling ratio with each aggregate metric across
    (strategy, k) cells."""
    cells = []
    for report in reports:
        agg = report.aggregates.get("All")
        if agg is None:
            continue
        cells.append(
            {
                "strategy": report.strategy,
                "k": report.k,
                "mean_tiling_ratio": agg["mean_tiling_ratio"],
                "vsr": agg["vsr"],
                "mean_iou": agg["mean_iou"],
                "mean_cd": agg["mean_cd"],
                "mean_ecd": agg["mean_ecd"],
            }
        )
    ratios = [c["mean_tiling_ratio"] for c in cells]
    correlations = {
        metric: pearson(ratios, [c[metric] for c in cells])
        for metric in ("vsr", "mean_iou", "mean_cd", "mean_ecd")
    }
    return {"cells": cells, "pearson": correlations}


def correlation_csv(stats: dict, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["strategy", "k", "mean_tiling_ratio", "vsr", "mean_iou", "mean_cd", "mean_ecd"])
        for c in stats["cells"]:
            writer.writerow(
                [c["strategy"], c["k"], c["mean_tiling_ratio"], c["vsr"],
                 c["mean_iou"], c["mean_cd"], c["mean_ecd"]]
            )


def failure_report(reports: Sequence[RunReport]) -> dict:
    """Counts and percentages of failure types per strategy; percentages are
    over failures only and sum to 100 when any failure exists."""
    out = {}
    for report in reports:
        counts = report.failure_counts
        total = sum(counts.values())
        out[f"{report.strategy}@k={report.k}"] = {
            "counts": dict(counts),
            "percent": {
                t: (100.0 * c / total if total else 0.0) for t, c in counts.items()
            },
            "total_failures": total,
        }
    return out
