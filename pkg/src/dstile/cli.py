"""Command-line entry points: corpus management, exemplar selection, and the
experiment harness."""

from __future__ import annotations

import json
from pathlib import Path

import click

from dstile import baselines, harness
from dstile.components import (
    DEFAULT_GRANULARITIES,
    component_set,
    load_component_cache,
    save_component_cache,
)
from dstile.corpus import (
    ingest_corpus,
    partition_tiers,
    score_corpus,
    split_test_set,
    write_corpus,
)


@click.group()
def main():
    """Exemplar-selection and CAD-evaluation toolkit."""


# ---------------------------------------------------------------------------
# corpus


@main.group()
def corpus():
    """Ingest and partition the exemplar database."""


@corpus.command("ingest")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
def corpus_ingest(in_path: str, out_dir: str):
    """Read a JSONL corpus, dedup by spec, and persist it."""
    cp = ingest_corpus(in_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_corpus(cp, out / "corpus.jsonl")
    click.echo(
        f"ingested {len(cp)} exemplars ({cp.dedup_dropped} duplicate specs dropped)"
    )


@corpus.command("partition")
@click.option("--db", "db_dir", required=True, type=click.Path(exists=True))
@click.option("--seed", required=True, type=int)
@click.option("--test-per-tier", required=True, type=int)
def corpus_partition(db_dir: str, seed: int, test_per_tier: int):
    """Score complexity, label tiers, and split test/database ids."""
    db = Path(db_dir)
    cp = ingest_corpus(db / "corpus.jsonl")
    partition_tiers(score_corpus(cp))
    test, database = split_test_set(cp, test_per_tier, seed)
    (db / "tiers.json").write_text(
        json.dumps(cp.tier_labels, sort_keys=True, indent=2), encoding="utf-8"
    )
    (db / "splits.json").write_text(
        json.dumps({"test": test, "database": database}, sort_keys=True, indent=2),
        encoding="utf-8",
    )
    counts = {tier: len(ids) for tier, ids in test.items()}
    click.echo(f"tiers written; test ids per tier: {counts}")


# ---------------------------------------------------------------------------
# select


def _load_db_components(db: Path, granularities: tuple[int, ...]):
    cp = ingest_corpus(db / "corpus.jsonl")
    cache_path = db / "components.json"
    cached = load_component_cache(cache_path, granularities)
    if cached is not None and set(cached) == set(cp.ids()):
        components = [cached[e.id] for e in cp.exemplars]
    else:
        components = [component_set(e.spec, granularities) for e in cp.exemplars]
        save_component_cache(
            cache_path, dict(zip(cp.ids(), components)), granularities
        )
    return cp, components


@main.command("select")
@click.option("--strategy", type=click.Choice(baselines.STRATEGIES), default="dst")
@click.option("--k", required=True, type=int)
@click.option("--fill-to-k", is_flag=True, default=False)
@click.option("--query-file", required=True, type=click.Path(exists=True))
@click.option("--db", "db_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--seed", type=int, default=0)
@click.option("--granularities", default=",".join(map(str, DEFAULT_GRANULARITIES)))
def select_cmd(
    strategy: str,
    k: int,
    fill_to_k: bool,
    query_file: str,
    db_dir: str,
    out_path: str,
    seed: int,
    granularities: str,
):
    """Select k exemplars for the query spec in --query-file."""
    sizes = tuple(int(x) for x in granularities.split(","))
    query_spec = Path(query_file).read_text(encoding="utf-8").strip()
    cp, db_components = _load_db_components(Path(db_dir), sizes)
    query_components = component_set(query_spec, sizes)
    result = harness.select_exemplars(
        strategy,
        db_components,
        cp.specs(),
        query_components,
        query_spec,
        k,
        seed,
        fill_to_k=fill_to_k,
    )
    payload = result.to_dict()
    payload["chosen_ids"] = [cp.exemplars[i].id for i in result.chosen]
    Path(out_path).write_text(json.dumps(payload, indent=2), encoding="utf-8")
    click.echo(
        f"{strategy}: chose {payload['chosen_ids']} (tiling ratio {result.tiling_ratio:.4f})"
    )


# ---------------------------------------------------------------------------
# harness


@main.group("harness")
def harness_group():
    """Run experiments and emit reports."""


@harness_group.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def harness_run(config_path: str):
    """Run one experiment cell and write its report."""
    config = harness.load_config(config_path)
    report = harness.run_experiment(config)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    out = config.out_dir / f"report_{report.strategy}_k{report.k}.json"
    report.save(out)
    click.echo(f"report written to {out}")
    for tier, agg in sorted(report.aggregates.items()):
        click.echo(
            f"  {tier}: vsr={agg['vsr']:.3f} iou={agg['mean_iou']:.3f} "
            f"cd={agg['mean_cd']:.3f} ecd={agg['mean_ecd']:.3f} "
            f"tiling={agg['mean_tiling_ratio']:.3f}"
        )


@harness_group.command("sweep")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--shots", required=True, help="comma-separated k values, e.g. 1,2,3")
def harness_sweep(config_path: str, shots: str):
    """Run the experiment across shot counts and write per-k reports + CSV."""
    config = harness.load_config(config_path)
    ks = [int(x) for x in shots.split(",")]
    reports = harness.sweep_shots(config, ks)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    for k, report in reports.items():
        report.save(config.out_dir / f"report_{report.strategy}_k{k}.json")
    csv_path = config.out_dir / "sweep.csv"
    harness.sweep_csv(reports, csv_path)
    click.echo(f"{len(reports)} reports + {csv_path} written")


@harness_group.command("report")
@click.argument("kind", type=click.Choice(["correlation", "failures"]))
@click.option("--in", "in_dir", required=True, type=click.Path(exists=True))
def harness_report(kind: str, in_dir: str):
    """Aggregate stored run reports into a correlation or failure table."""
    paths = sorted(Path(in_dir).glob("report_*.json"))
    if not paths:
        raise click.ClickException(f"no report_*.json files in {in_dir}")
    reports = [harness.RunReport.load(p) for p in paths]
    if kind == "correlation":
        stats = harness.correlation_report(reports)
        out = Path(in_dir) / "correlation.csv"
        harness.correlation_csv(stats, out)
        click.echo(json.dumps(stats["pearson"], indent=2))
        click.echo(f"scatter table written to {out}")
    else:
        table = harness.failure_report(reports)
        out = Path(in_dir) / "failures.json"
        out.write_text(json.dumps(table, indent=2, sort_keys=True), encoding="utf-8")
        click.echo(json.dumps(table, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
