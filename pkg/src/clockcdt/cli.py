"""``cdt`` command line: generate, score, read, run batteries, ingest and report."""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from .errors import ClockError, ConfigInvalid, EmptyResults
from .genlab import DefectSpec, render_clock
from .geometry import extract_features
from .harness import RunStore, ingest_manual_scores, load_results, parse_items_text, run_battery
from .reader import read_time
from .report import ResultRow, emit_json, emit_table
from .rubric import RubricConfig, parse_time, score_document
from .scene import parse_drawing

EXIT_CONFIG = 2


def _rubric(path: str | None) -> RubricConfig:
    try:
        return RubricConfig.load(path) if path else RubricConfig()
    except ConfigInvalid as exc:
        raise click.ClickException(str(exc)) from exc


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=not text.endswith("\n"))


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose: bool) -> None:
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--time", "time_", default="9:10", show_default=True, help="Target time H:MM.")
@click.option("--defect", "defects", multiple=True, help="Defect as key=value; repeatable.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path(dir_okay=False),
              help="SVG output; the sidecar is written next to it as .json.")
def gen(time_: str, defects: tuple[str, ...], seed: int, out: str) -> None:
    """Generate a synthetic clock drawing with predicted scores."""
    try:
        spec = DefectSpec.from_pairs(list(defects))
        clock = render_clock(parse_time(time_), spec, seed)
    except (ClockError, ValueError) as exc:
        raise click.BadParameter(str(exc)) from exc
    out_path = Path(out)
    out_path.write_text(clock.document)
    out_path.with_suffix(".json").write_text(clock.sidecar_json() + "\n")
    click.echo(f"wrote {out_path} and {out_path.with_suffix('.json')}")


@main.command()
@click.argument("drawing", type=click.Path(exists=True, dir_okay=False))
@click.option("--rubric", type=click.Path(exists=True, dir_okay=False), help="Rubric YAML/JSON.")
def score(drawing: str, rubric: str | None) -> None:
    """Score one SVG drawing and print the report as JSON."""
    report = score_document(Path(drawing).read_text(), _rubric(rubric))
    click.echo(report.to_json())


@main.command()
@click.argument("drawing", type=click.Path(exists=True, dir_okay=False))
def read(drawing: str) -> None:
    """Read the time shown by an SVG clock; prints primary and alternates."""
    try:
        reading = read_time(extract_features(parse_drawing(Path(drawing).read_text())))
    except ClockError as exc:
        click.echo(json.dumps({"error": type(exc).__name__, "detail": str(exc)}))
        sys.exit(1)
    click.echo(json.dumps(reading.to_dict(), indent=2, sort_keys=True))


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False))
@click.option("--run", "run_dir", type=click.Path(file_okay=False), help="Reuse this run directory.")
def battery(config_path: str, run_dir: str | None) -> None:
    """Administer the battery described by a YAML config.

    Exit status is 0 on success, 1 if any endpoint failed, 2 on a config error.
    """
    try:
        result = run_battery(config_path, run_dir=run_dir)
    except ConfigInvalid as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    click.echo(f"run directory: {result.run_dir}")
    for rec in result.results:
        click.echo(f"{rec.model_id}: total={rec.report.total_raw} weighted={rec.report.weighted_raw} "
                   f"status={rec.status}")
    for rd in result.readings:
        click.echo(f"{rd['model_id']}: reported={rd.get('reported')} category={rd.get('category')}")
    for failure in result.failures:
        click.echo(f"failed: {failure}", err=True)
    sys.exit(result.exit_code)


@main.command()
@click.option("--model", "model_id", required=True)
@click.option("--items", required=True, help="13 comma-separated item scores.")
@click.option("--group", type=click.Choice(["Multimodal", "Language"]), default="Multimodal",
              show_default=True)
@click.option("--run", "run_dir", type=click.Path(file_okay=False), help="Append to this run directory.")
def ingest(model_id: str, items: str, group: str, run_dir: str | None) -> None:
    """Record manually assigned item scores (e.g. for raster drawings)."""
    try:
        scores = parse_items_text(items)
    except (ClockError, ValueError) as exc:
        raise click.BadParameter(str(exc), param_hint="--items") from exc
    store = RunStore(Path(run_dir)) if run_dir else None
    record = ingest_manual_scores(model_id, scores, group=group, store=store)
    click.echo(json.dumps(record.to_dict(), indent=2, sort_keys=True))


@main.command()
@click.option("--run", "run_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--format", "fmt", type=click.Choice(["md", "csv", "json"]), default="md",
              show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
def report(run_dir: str, fmt: str, out: str | None) -> None:
    """Tabulate the results stored in a run directory."""
    rows = [ResultRow.from_record(r) for r in load_results(run_dir)]
    if fmt == "json":
        _emit(emit_json(rows), out)
        return
    try:
        _emit(emit_table(rows, fmt), out)
    except EmptyResults as exc:
        raise click.ClickException(str(exc)) from exc


if __name__ == "__main__":
    main()
