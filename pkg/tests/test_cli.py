from __future__ import annotations

import json
from pathlib import Path

import pytest

from mangatl.cli import main
from mangatl.metrics import MqmAnnotation, MqmAnnotationSet
from mangatl.review import (build_review_bundle, default_word_count,
                            load_review_bundle)
from mangatl.strategy import TranslationRun
from mangatl.errors import DataError


def run_cli(*args) -> int:
    return main([str(a) for a in args])


@pytest.fixture()
def translated(demo_workspace, tmp_path):
    """A completed replay run on the demo volume."""
    run_path = tmp_path / "run.json"
    code = run_cli("translate", "--volume", demo_workspace["manifest"],
                   "--approach", "PBP_VIS", "--mode", "replay",
                   "--cassette", demo_workspace["cassette"],
                   "--out", run_path)
    assert code == 0
    return run_path


def test_ingest_reports_counts(demo_workspace, capsys):
    assert run_cli("ingest", demo_workspace["manifest"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["pages"] == 3 and doc["lines"] == 8


def test_ingest_openmantra_writes_manifests(openmantra_root, tmp_path, capsys):
    assert run_cli("ingest", openmantra_root, "--format", "openmantra",
                   "--out", tmp_path / "canonical") == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["volumes"]) == 5
    for entry in doc["volumes"]:
        assert Path(entry["manifest"]).is_file()


def test_translate_writes_run_with_all_lines(translated, demo_volume):
    run = TranslationRun.load(translated)
    assert set(run.hypotheses) == set(demo_volume.line_ids())
    assert run.failed_lines == []
    assert run.config_digest and run.cassette_digest


def test_translate_replay_requires_cassette(demo_workspace):
    code = run_cli("translate", "--volume", demo_workspace["manifest"],
                   "--approach", "PBP", "--mode", "replay")
    assert code == 2


def test_translate_cassette_miss_is_backend_error(demo_workspace, tmp_path,
                                                  capsys):
    from mangatl.gateway import Cassette
    empty = tmp_path / "empty.json"
    Cassette().save(empty)
    code = run_cli("translate", "--volume", demo_workspace["manifest"],
                   "--approach", "PBP", "--mode", "replay",
                   "--cassette", empty, "--out", tmp_path / "r.json")
    assert code == 3
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"]["type"] == "RunError"
    # the aborted run is persisted for inspection
    assert (tmp_path / "r.partial.json").is_file()


def test_bad_manifest_is_data_error(tmp_path, capsys):
    bad = tmp_path / "volume.json"
    bad.write_text("{}", encoding="utf-8")
    code = run_cli("ingest", bad)
    assert code == 4
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["type"] == "IngestError"


def test_evaluate_and_report(translated, demo_workspace, tmp_path, capsys):
    report_path = tmp_path / "report.json"
    assert run_cli("evaluate", "--run", translated,
                   "--volume", demo_workspace["manifest"],
                   "--lang", "en", "--out", report_path) == 0
    capsys.readouterr()
    assert run_cli("report", report_path) == 0
    table = capsys.readouterr().out
    assert "PBP_VIS" in table and "**100.0**" in table


def test_report_multiple_runs(translated, demo_workspace, tmp_path, capsys):
    paths = []
    for i, approach in enumerate(["LBL", "PBP", "VBV_VIS"]):
        run_path = tmp_path / f"run{i}.json"
        assert run_cli("translate", "--volume", demo_workspace["manifest"],
                       "--approach", approach, "--mode", "replay",
                       "--cassette", demo_workspace["cassette"],
                       "--out", run_path) == 0
        report_path = tmp_path / f"report{i}.json"
        assert run_cli("evaluate", "--run", run_path,
                       "--volume", demo_workspace["manifest"],
                       "--out", report_path) == 0
        paths.append(report_path)
    capsys.readouterr()
    assert run_cli("report", *paths) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 5  # header + rule + one row per approach
    for approach in ("LBL", "PBP", "VBV_VIS"):
        assert any(line.startswith(approach) for line in lines)


def test_layout_debug_overlays(demo_workspace, tmp_path, capsys):
    assert run_cli("layout-debug", "--volume", demo_workspace["manifest"],
                   "--out", tmp_path / "overlays") == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["disagreement_rate"] == 0.0
    assert len(doc["overlays"]) == 3
    for path in doc["overlays"]:
        assert Path(path).is_file()


def test_cost_command(translated, capsys):
    assert run_cli("cost", "--run", translated,
                   "--input-price", "0.00001", "--output-price", "0.00003") == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["requests"] == 3
    assert doc["cost"] == pytest.approx(
        doc["input_tokens"] * 0.00001 + doc["output_tokens"] * 0.00003)


# ---------------------------------------------------------------------------
# Review bundles and MQM scoring


def test_export_review_bundle(translated, demo_workspace, tmp_path, capsys):
    out = tmp_path / "bundle"
    assert run_cli("export-review", "--run", translated,
                   "--volume", demo_workspace["manifest"],
                   "--lang", "en", "--out", out) == 0
    bundle = load_review_bundle(out / "bundle.json")
    run = TranslationRun.load(translated)
    assert len(bundle["lines"]) == len(run.hypotheses)
    ids = [line["line_id"] for line in bundle["lines"]]
    assert sorted(ids) == sorted(run.hypotheses)
    for line in bundle["lines"]:
        assert (out / line["image"]).is_file()
        assert line["hypothesis"] == run.hypotheses[line["line_id"]]
    assert bundle["word_count"] == default_word_count(run)
    assert bundle["provenance"]["approach"] == "PBP_VIS"
    assert any(group["group"] == "accuracy" for group in bundle["taxonomy"])


def test_bundle_loader_rejects_missing_field(translated, demo_workspace,
                                             tmp_path):
    out = tmp_path / "bundle"
    run = TranslationRun.load(translated)
    volume_manifest = demo_workspace["manifest"]
    from mangatl.corpus import load_volume
    bundle_path = build_review_bundle(run, load_volume(volume_manifest), "en",
                                      out)
    doc = json.loads(bundle_path.read_text(encoding="utf-8"))
    broken_line = doc["lines"][2]["line_id"]
    del doc["lines"][2]["hypothesis"]
    bundle_path.write_text(json.dumps(doc), encoding="utf-8")
    with pytest.raises(DataError) as err:
        load_review_bundle(bundle_path)
    assert "hypothesis" in str(err.value)
    assert "line 2" in str(err.value)


def test_mqm_score_rows(tmp_path, capsys):
    rows = [("Official", 14, 50, 107, 1405), ("GT", 5, 20, 272, 1338),
            ("PBP_VIS", 8, 18, 160, 1416)]
    paths = []
    for system, minor, major, critical, words in rows:
        annotations = (
            [MqmAnnotation("l1", "fluency/grammar", "minor")] * minor
            + [MqmAnnotation("l1", "accuracy/mistranslation", "major")] * major
            + [MqmAnnotation("l1", "accuracy/mistranslation", "critical")] * critical)
        aset = MqmAnnotationSet(system=system, word_count=words,
                                annotations=annotations)
        paths.append(aset.save(tmp_path / f"{system}.json"))
    assert run_cli("mqm-score", *paths) == 0
    out = capsys.readouterr().out
    assert "-1.31" in out and "-4.25" in out and "-1.98" in out
    lines = out.splitlines()
    assert len(lines) == 5

    assert run_cli("mqm-score", *paths, "--json") == 0
    doc = json.loads(capsys.readouterr().out)
    assert [row["system"] for row in doc["systems"]] == [r[0] for r in rows]


def test_export_review_then_empty_annotations_scores_one(translated,
                                                         demo_workspace,
                                                         tmp_path, capsys):
    out = tmp_path / "bundle"
    assert run_cli("export-review", "--run", translated,
                   "--volume", demo_workspace["manifest"], "--out", out) == 0
    bundle = load_review_bundle(out / "bundle.json")
    empty = MqmAnnotationSet(system="empty", word_count=bundle["word_count"])
    path = empty.save(tmp_path / "empty.json")
    capsys.readouterr()
    assert run_cli("mqm-score", path, "--json") == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["systems"][0]["score"] == 1.0


def test_rerun_reproduces_identical_artifacts(demo_workspace, tmp_path):
    outs = []
    for i in (0, 1):
        run_path = tmp_path / f"run{i}.json"
        report_path = tmp_path / f"report{i}.json"
        assert run_cli("translate", "--volume", demo_workspace["manifest"],
                       "--approach", "VBP_VIS_COD", "--mode", "replay",
                       "--cassette", demo_workspace["cassette"],
                       "--out", run_path) == 0
        assert run_cli("evaluate", "--run", run_path,
                       "--volume", demo_workspace["manifest"],
                       "--out", report_path) == 0
        outs.append((run_path.read_bytes(), report_path.read_bytes()))
    assert outs[0] == outs[1]


def test_demo_command(tmp_path, capsys):
    assert run_cli("demo", "--out", tmp_path / "ws") == 0
    doc = json.loads(capsys.readouterr().out)
    assert Path(doc["volume"]).is_file()
    assert Path(doc["cassette"]).is_file()
