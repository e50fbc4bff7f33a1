"""Command-line orchestration for the translation and evaluation pipeline.

Exit codes: 0 ok, 2 config error, 3 backend error, 4 data error.
Failures are emitted as one JSON object on stderr so wrappers can parse
them.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import click
import numpy as np
from PIL import Image, ImageDraw

from . import corpus, layout, metrics, review, synthetic
from .config import RunConfig
from .errors import (ConfigError, DataError, GatewayError, IngestError,
                     MangatlError, MetricError, ParseError, RunError)
from .gateway import HttpChatBackend, LlmGateway, cost_report
from .imaging import render_number_mask, scale_for_font
from .strategy import APPROACHES, TranslationRun, get_approach, run_approach


@click.group()
def cli():
    """Manga translation strategies and their evaluation harness."""


def _echo_json(doc: dict) -> None:
    click.echo(json.dumps(doc, ensure_ascii=False, indent=2))


@cli.command()
@click.argument("source", type=click.Path(exists=True, path_type=Path))
@click.option("--format", "fmt", type=click.Choice(["canonical", "openmantra"]),
              default="canonical", show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default=None,
              help="Directory for canonical manifests (openmantra import).")
def ingest(source: Path, fmt: str, out: Path | None):
    """Validate a volume manifest, or import an external dataset layout."""
    if fmt == "canonical":
        volume = corpus.load_volume(source)
        _echo_json({"title": volume.title, "split": volume.split,
                    "pages": len(volume.pages), "lines": volume.line_count()})
        return
    volumes = corpus.import_openmantra(source)
    summary = []
    for volume in volumes:
        entry = {"title": volume.title, "split": volume.split,
                 "pages": len(volume.pages), "lines": volume.line_count()}
        if out:
            manifest = Path(out) / volume.volume_id / "volume.json"
            corpus.save_volume(volume, manifest)
            entry["manifest"] = str(manifest)
        summary.append(entry)
    _echo_json({"volumes": summary})


def _make_gateway(config: RunConfig, endpoint: str | None) -> LlmGateway:
    if config.mode == "replay":
        return LlmGateway(mode="replay", cassette_path=config.cassette)
    backend = HttpChatBackend(endpoint=endpoint)
    return LlmGateway(mode=config.mode, backend=backend,
                      cassette_path=config.cassette)


@cli.command()
@click.option("--volume", "volume_path", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--approach", "approach_name", required=True,
              type=click.Choice(sorted(APPROACHES), case_sensitive=False))
@click.option("--target-lang", default="en", show_default=True)
@click.option("--mode", type=click.Choice(["live", "record", "replay"]),
              default="replay", show_default=True)
@click.option("--cassette", type=click.Path(path_type=Path), default=None)
@click.option("--endpoint", default=None,
              help="Chat backend URL (or MANGATL_LLM_ENDPOINT).")
@click.option("--model", default=None)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--retries", type=int, default=2, show_default=True)
@click.option("--lmax", type=int, default=150, show_default=True,
              help="Word budget of the rolling summary.")
@click.option("--prompt-dir", type=click.Path(path_type=Path), default=None,
              help="Directory overriding the built-in prompt resources.")
@click.option("--out", type=click.Path(path_type=Path), default=None,
              help="Run file path (default runs/<volume>/<approach>/run.json).")
def translate(volume_path, approach_name, target_lang, mode, cassette, endpoint,
              model, workers, retries, lmax, prompt_dir, out):
    """Execute one approach over a volume and write the run artifact."""
    volume = corpus.load_volume(volume_path)
    approach = get_approach(approach_name)
    config = RunConfig(approach=approach.name, target_lang=target_lang,
                       mode=mode, cassette=cassette, workers=workers,
                       retries=retries, lmax=lmax, prompt_dir=prompt_dir)
    if model:
        config.model = model
    config.validate()
    gateway = _make_gateway(config, endpoint)

    out = out or (config.output_dir / volume.volume_id / approach.name / "run.json")
    try:
        run = run_approach(volume, approach, gateway, config)
    except RunError as exc:
        if exc.partial_run is not None:
            partial = Path(out).with_suffix(".partial.json")
            exc.partial_run.save(partial)
            click.echo(f"partial run saved to {partial}", err=True)
        raise
    if config.mode == "live":
        run.recorded_at = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    run.save(out)
    _echo_json({"run": str(out), "approach": approach.name,
                "lines": len(run.hypotheses),
                "failed_lines": len(run.failed_lines),
                "requests": len(run.requests),
                "input_tokens": run.input_tokens,
                "output_tokens": run.output_tokens})


@cli.command()
@click.option("--run", "run_path", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--volume", "volume_path", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--lang", default="en", show_default=True)
@click.option("--metrics", "metric_list", default="chrf", show_default=True,
              help="Comma-separated: chrf,bertscore,bleurt,xcomet.")
@click.option("--scoring-endpoint", default=None,
              help="Scoring service URL for learned metrics.")
@click.option("--aggregate", type=click.Choice(["macro", "corpus"]),
              default="macro", show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default=None)
def evaluate(run_path, volume_path, lang, metric_list, scoring_endpoint,
             aggregate, out):
    """Score a run against a volume's references and write the report."""
    which = tuple(m.strip() for m in metric_list.split(",") if m.strip())
    config = RunConfig(metrics=which, aggregate=aggregate, mode="live")
    config.validate()
    run = TranslationRun.load(run_path)
    volume = corpus.load_volume(volume_path)
    report = metrics.evaluate_run(run, volume, lang, which=which,
                                  scoring_endpoint=scoring_endpoint,
                                  aggregate=aggregate, date=run.recorded_at)
    out = out or Path(run_path).parent / "report.json"
    report.save(out)
    _echo_json({"report": str(out), "per_volume": report.per_volume})


@cli.command()
@click.argument("reports", nargs=-1, required=True,
                type=click.Path(exists=True, path_type=Path))
@click.option("--out", type=click.Path(path_type=Path), default=None,
              help="Also write the rendered table to a file.")
def report(reports, out):
    """Comparison table across runs, one row per approach."""
    loaded = [metrics.MetricReport.load(path) for path in reports]
    table = metrics.render_comparison_table(loaded)
    click.echo(table)
    if out:
        Path(out).write_text(table + "\n", encoding="utf-8")


def _paste_number(arr: np.ndarray, number: int, x: int, y: int,
                  color=(200, 30, 30)) -> None:
    mask = render_number_mask(number, scale_for_font(22))
    h = min(mask.shape[0], arr.shape[0] - y)
    w = min(mask.shape[1], arr.shape[1] - x)
    if h <= 0 or w <= 0:
        return
    region = arr[y:y + h, x:x + w]
    region[mask[:h, :w]] = color


@cli.command("layout-debug")
@click.option("--volume", "volume_path", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--page", "page_index", type=int, default=None,
              help="Restrict overlays to one page index.")
@click.option("--eps", type=float, default=80.0, show_default=True,
              help="Clustering radius over region centers.")
@click.option("--min-pts", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
def layout_debug(volume_path, page_index, eps, min_pts, out):
    """Reading-order and clustering overlays plus the disagreement report."""
    volume = corpus.load_volume(volume_path)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    params = layout.ClusterParams(eps=eps, min_pts=min_pts, min_box=0.0)

    overlays = []
    for page in volume.pages:
        if page_index is not None and page.index != page_index:
            continue
        ordered = layout.estimate_reading_order(page)
        with Image.open(page.image_path) as img:
            img = img.convert("RGB")
        draw = ImageDraw.Draw(img)
        for panel in page.panels:
            b = panel.bbox
            draw.rectangle([b.x, b.y, b.right - 1, b.bottom - 1],
                           outline=(30, 160, 30), width=2)
        for region in page.regions:
            b = region.bbox
            draw.rectangle([b.x, b.y, b.right - 1, b.bottom - 1],
                           outline=(60, 60, 220), width=2)
        centers = [layout.Point2(*page.region_by_id(rid).bbox.center)
                   for rid in ordered.order]
        clusters, _ = layout.optics_cluster(centers, params)
        for box in layout.cluster_boxes(clusters, centers, params):
            draw.rectangle([box.x, box.y, box.right, box.bottom],
                           outline=(220, 120, 30), width=1)
        arr = np.array(img)
        for position, region_id in enumerate(ordered.order, start=1):
            bbox = page.region_by_id(region_id).bbox
            _paste_number(arr, position, int(bbox.x) + 3, int(bbox.y) + 3)
        overlay_path = out / f"p{page.index:03d}_overlay.png"
        Image.fromarray(arr).save(overlay_path)
        overlays.append(str(overlay_path))

    order_report = layout.reading_order_report(volume)
    _echo_json({"overlays": overlays,
                "disagreement_rate": order_report.disagreement_rate,
                "pages": order_report.pages})


@cli.command("export-review")
@click.option("--run", "run_path", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--volume", "volume_path", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--lang", default="en", show_default=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
def export_review(run_path, volume_path, lang, out):
    """Bundle a run's lines, page images and the issue taxonomy for review."""
    run = TranslationRun.load(run_path)
    volume = corpus.load_volume(volume_path)
    bundle = review.build_review_bundle(run, volume, lang, out)
    review.load_review_bundle(bundle)  # self-check before handing off
    _echo_json({"bundle": str(bundle), "lines": len(run.hypotheses)})


@cli.command("mqm-score")
@click.argument("annotations", nargs=-1, required=True,
                type=click.Path(exists=True, path_type=Path))
@click.option("--json", "as_json", is_flag=True, default=False)
def mqm_score_cmd(annotations, as_json):
    """Score one or more annotation sets with the severity-weighted formula."""
    results = []
    for path in annotations:
        annotation_set = review.read_annotation_set(path)
        minor, major, critical = annotation_set.counts()
        score = metrics.mqm_score(annotation_set)
        results.append((annotation_set.system, minor, major, critical, score))
    if as_json:
        _echo_json({"systems": [
            {"system": system, "minor": minor, "major": major,
             "critical": critical, "score": score}
            for system, minor, major, critical, score in results]})
    else:
        click.echo(metrics.render_mqm_table(results))


@cli.command()
@click.option("--run", "run_path", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--input-price", type=float, default=0.0, show_default=True,
              help="Price per input token.")
@click.option("--output-price", type=float, default=0.0, show_default=True,
              help="Price per output token.")
def cost(run_path, input_price, output_price):
    """Token and cost totals for a run."""
    run = TranslationRun.load(run_path)
    summary = cost_report(run, {"input": input_price, "output": output_price})
    _echo_json({"requests": summary.requests,
                "input_tokens": summary.input_tokens,
                "output_tokens": summary.output_tokens,
                "cost": summary.cost})


@cli.command()
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--target-lang", default="en", show_default=True)
def demo(out, target_lang):
    """Build the bundled synthetic volume and a full replay cassette."""
    manifest, cassette = synthetic.build_demo_workspace(out,
                                                        target_lang=target_lang)
    _echo_json({"volume": str(manifest), "cassette": str(cassette)})


def _exit_code(error: MangatlError) -> int:
    if isinstance(error, ConfigError):
        return 2
    if isinstance(error, (GatewayError, RunError)):
        return 3
    if isinstance(error, MetricError):
        return 3 if error.reason == "backend" else 4
    if isinstance(error, (IngestError, DataError, ParseError)):
        return 4
    return 1


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.ClickException as exc:
        exc.show()
        return 2
    except click.Abort:
        return 2
    except MangatlError as exc:
        sys.stderr.write(json.dumps({"error": {
            "type": type(exc).__name__,
            "reason": exc.reason,
            "message": str(exc),
        }}) + "\n")
        return _exit_code(exc)


if __name__ == "__main__":
    raise SystemExit(main())
