"""Sentence-level evaluation: native ChrF, MQM scoring, learned-metric client.

ChrF is computed in-process (character n-grams only, orders 1..max_n,
recall-weighted F-beta, whitespace stripped by default); orders where
either side has no n-grams are skipped so short identical strings still
score 100.  Learned metrics (BERTScore, BLEURT, xCOMET) are large neural
models and live behind a small HTTP scoring service instead.  MQM turns
human error annotations into a quality score with severity weights
5/10/25 over the evaluated text's word count.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .corpus import Volume
from .errors import DataError, MetricError

_WHITESPACE = re.compile(r"\s+")

LEARNED_METRICS = ("bertscore", "bleurt", "xcomet")


@dataclass(frozen=True)
class ChrFParams:
    max_n: int = 6
    beta: float = 2.0
    strip_whitespace: bool = True

    def __post_init__(self):
        if self.max_n < 1:
            raise ValueError("max_n must be >= 1")
        if self.beta <= 0:
            raise ValueError("beta must be positive")


DEFAULT_CHRF = ChrFParams()


def _prepare(text: str, params: ChrFParams) -> str:
    return _WHITESPACE.sub("", text) if params.strip_whitespace else text


def _ngram_counts(text: str, n: int) -> Counter:
    return Counter(text[i:i + n] for i in range(len(text) - n + 1))


def _ngram_statistics(hyp: str, ref: str, max_n: int):
    """Per-order (hypothesis_total, reference_total, matched) triples."""
    stats = []
    for n in range(1, max_n + 1):
        hyp_counts = _ngram_counts(hyp, n)
        ref_counts = _ngram_counts(ref, n)
        matched = sum(min(count, ref_counts[gram])
                      for gram, count in hyp_counts.items())
        stats.append((sum(hyp_counts.values()), sum(ref_counts.values()), matched))
    return stats


def _f_beta_from_stats(stats, beta: float) -> float:
    precision_sum = recall_sum = 0.0
    effective = 0
    for hyp_total, ref_total, matched in stats:
        if hyp_total == 0 or ref_total == 0:
            continue
        precision_sum += matched / hyp_total
        recall_sum += matched / ref_total
        effective += 1
    if effective == 0:
        return 0.0
    precision = precision_sum / effective
    recall = recall_sum / effective
    if precision + recall == 0:
        return 0.0
    beta_sq = beta ** 2
    return 100.0 * (1 + beta_sq) * precision * recall / (beta_sq * precision + recall)


def chrf(hypothesis: str, reference: str,
         params: ChrFParams = DEFAULT_CHRF) -> float:
    """Character n-gram F-score on a 0-100 scale for one sentence pair."""
    if reference == "":
        raise MetricError("empty_reference", "reference must be non-empty")
    hyp = _prepare(hypothesis, params)
    ref = _prepare(reference, params)
    if not hyp:
        return 0.0
    return _f_beta_from_stats(_ngram_statistics(hyp, ref, params.max_n), params.beta)


def corpus_chrf(pairs: list[tuple[str, str]],
                params: ChrFParams = DEFAULT_CHRF) -> float:
    """ChrF over pooled n-gram statistics instead of a sentence average."""
    totals = [(0, 0, 0)] * params.max_n
    for hypothesis, reference in pairs:
        if reference == "":
            raise MetricError("empty_reference", "reference must be non-empty")
        stats = _ngram_statistics(_prepare(hypothesis, params),
                                  _prepare(reference, params), params.max_n)
        totals = [(a + x, b + y, c + z)
                  for (a, b, c), (x, y, z) in zip(totals, stats)]
    return _f_beta_from_stats(totals, params.beta)


# ---------------------------------------------------------------------------
# MQM


MQM_SEVERITIES = ("minor", "major", "critical")
MQM_WEIGHTS = {"minor": 5.0, "major": 10.0, "critical": 25.0}

# Manga-specific issue tree; leaves are "group/issue" paths.
MQM_TAXONOMY: dict[str, dict] = {
    "fluency": {
        "label": "Fluency",
        "issues": {
            "punctuation": "Punctuation",
            "orthography": "Orthography (spelling, punctuation)",
            "grammar": "Grammar",
        },
    },
    "accuracy": {
        "label": "Accuracy",
        "issues": {
            "addition_omission": "Addition or omission",
            "mistranslation": "Mistranslation",
            "untranslated": "Untranslated text",
        },
    },
    "terminology": {
        "label": "Proper Nouns / Terminology",
        "issues": {
            "orthography": "Orthography",
            "proper_noun_not_recognized": "Failed to recognize as proper noun",
        },
    },
    "style": {
        "label": "Style",
        "issues": {
            "formality": "Formality",
            "awkward": "Awkward",
            "boring": "Boring",
            "tone": "Tone (emotional tone is miscalibrated)",
        },
    },
    "other": {
        "label": "Other",
        "issues": {
            "other": "Other",
        },
    },
}


def taxonomy_leaves() -> list[str]:
    return [f"{group}/{issue}"
            for group, node in MQM_TAXONOMY.items()
            for issue in node["issues"]]


def taxonomy_as_list() -> list[dict]:
    """UI-friendly form: ordered groups with labeled leaf issues."""
    return [
        {
            "group": group,
            "label": node["label"],
            "issues": [{"id": f"{group}/{issue}", "label": label}
                       for issue, label in node["issues"].items()],
        }
        for group, node in MQM_TAXONOMY.items()
    ]


@dataclass(frozen=True)
class MqmAnnotation:
    line_id: str
    issue_type: str  # leaf path, e.g. "accuracy/mistranslation"
    severity: str
    span: tuple[int, int] | None = None
    note: str = ""


@dataclass
class MqmAnnotationSet:
    """Human error annotations for one system's output."""

    system: str
    word_count: int
    annotations: list[MqmAnnotation] = field(default_factory=list)

    def validate(self) -> None:
        leaves = set(taxonomy_leaves())
        for ann in self.annotations:
            if ann.issue_type not in leaves:
                raise DataError("annotation",
                                f"unknown issue type {ann.issue_type!r}")
            if ann.severity not in MQM_SEVERITIES:
                raise DataError("annotation",
                                f"unknown severity {ann.severity!r}")
            if ann.span is not None:
                start, end = ann.span
                if start < 0 or end < start:
                    raise DataError("annotation", f"bad span {ann.span!r}")

    def counts(self) -> tuple[int, int, int]:
        tally = Counter(ann.severity for ann in self.annotations)
        return tally["minor"], tally["major"], tally["critical"]

    def to_dict(self) -> dict:
        return {
            "schema": "mangatl/annotations/v1",
            "system": self.system,
            "word_count": self.word_count,
            "annotations": [
                {
                    "line_id": ann.line_id,
                    "issue_type": ann.issue_type,
                    "severity": ann.severity,
                    "span": list(ann.span) if ann.span is not None else None,
                    "note": ann.note,
                }
                for ann in self.annotations
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MqmAnnotationSet":
        if not isinstance(doc, dict) or "word_count" not in doc:
            raise DataError("annotation", "not an annotation set (word_count missing)")
        annotations = []
        for i, raw in enumerate(doc.get("annotations", [])):
            try:
                span = raw.get("span")
                annotations.append(MqmAnnotation(
                    line_id=str(raw["line_id"]),
                    issue_type=str(raw["issue_type"]),
                    severity=str(raw["severity"]),
                    span=(int(span[0]), int(span[1])) if span else None,
                    note=str(raw.get("note", "")),
                ))
            except (KeyError, TypeError, ValueError, IndexError) as exc:
                raise DataError("annotation", f"annotation {i}: {exc}") from exc
        made = cls(system=str(doc.get("system", "unnamed")),
                   word_count=int(doc["word_count"]), annotations=annotations)
        made.validate()
        return made

    @classmethod
    def load(cls, path: str | Path) -> "MqmAnnotationSet":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError("annotation", f"{path}: {exc}") from exc
        return cls.from_dict(doc)

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), ensure_ascii=False, indent=2)
                        + "\n", encoding="utf-8")
        return path


def mqm_score_from_counts(minor: int, major: int, critical: int,
                          word_count: int) -> float:
    """Quality score: 1 minus severity-weighted errors per word.

    Upper bound 1 (no errors), unbounded below.
    """
    if word_count <= 0:
        raise MetricError("degenerate", "word_count must be positive")
    penalty = (MQM_WEIGHTS["minor"] * minor + MQM_WEIGHTS["major"] * major
               + MQM_WEIGHTS["critical"] * critical)
    return 1.0 - penalty / word_count


def mqm_score(annotation_set: MqmAnnotationSet) -> float:
    annotation_set.validate()
    minor, major, critical = annotation_set.counts()
    return mqm_score_from_counts(minor, major, critical,
                                 annotation_set.word_count)


# ---------------------------------------------------------------------------
# Learned metrics via the scoring service


class ScoringClient:
    """Client for the scoring-service protocol.

    ``POST <endpoint>/score`` with ``{"metric", "items": [{"source"?,
    "hypothesis", "reference"}]}`` returns ``{"scores": [...]}`` with one
    value in [0, 1] per item, order preserved.
    """

    def __init__(self, endpoint: str, timeout: float = 120.0):
        endpoint = endpoint.rstrip("/")
        if not endpoint.endswith("/score"):
            endpoint += "/score"
        self.endpoint = endpoint
        self.timeout = timeout

    def score_batch(self, metric: str, items: list[dict]) -> list[float]:
        if metric not in LEARNED_METRICS:
            raise MetricError("protocol", f"unknown learned metric {metric!r}")
        try:
            reply = requests.post(self.endpoint,
                                  json={"metric": metric, "items": items},
                                  timeout=self.timeout)
        except requests.RequestException as exc:
            raise MetricError("backend", f"scoring service unreachable: {exc}") from exc
        if reply.status_code != 200:
            raise MetricError("backend",
                              f"scoring service HTTP {reply.status_code}")
        try:
            scores = reply.json()["scores"]
        except (ValueError, KeyError) as exc:
            raise MetricError("protocol", f"malformed scoring reply: {exc}") from exc
        if not isinstance(scores, list) or len(scores) != len(items):
            raise MetricError("protocol",
                              f"expected {len(items)} scores, got {scores!r}")
        out = []
        for value in scores:
            value = float(value)
            if not 0.0 <= value <= 1.0:
                raise MetricError("protocol", f"score {value} outside [0, 1]")
            out.append(value)
        return out


def learned_score(source: str, hypothesis: str, reference: str,
                  metric: str, endpoint: str) -> float:
    """Score one line with a learned metric behind the scoring service.

    Only xCOMET judges against the source text; the other metrics see
    hypothesis and reference alone.
    """
    item: dict = {"hypothesis": hypothesis, "reference": reference}
    if metric == "xcomet":
        item["source"] = source
    return ScoringClient(endpoint).score_batch(metric, [item])[0]


# ---------------------------------------------------------------------------
# Run evaluation


@dataclass
class MetricReport:
    per_line: dict[str, dict[str, float]]
    per_volume: dict[str, float]
    metadata: dict

    def to_dict(self) -> dict:
        return {
            "schema": "mangatl/report/v1",
            "metadata": self.metadata,
            "per_volume": self.per_volume,
            "per_line": self.per_line,
        }

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), ensure_ascii=False, indent=2)
                        + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: str | Path) -> "MetricReport":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(per_line=doc.get("per_line", {}),
                   per_volume=doc.get("per_volume", {}),
                   metadata=doc.get("metadata", {}))


def evaluate_run(run, volume: Volume, lang: str,
                 which: tuple[str, ...] = ("chrf",),
                 chrf_params: ChrFParams = DEFAULT_CHRF,
                 scoring_endpoint: str | None = None,
                 aggregate: str = "macro",
                 date: str = "") -> MetricReport:
    """Score every line of a run against the volume's references.

    Failed (empty) hypotheses score ChrF 0 and are sent to learned
    metrics as empty strings, keeping per-line alignment intact.
    """
    rows = []  # (line_id, source, reference, hypothesis)
    for _, region in volume.iter_regions():
        reference = region.translations.get(lang)
        if reference is None:
            raise DataError("missing_reference",
                            f"region {region.id} has no {lang!r} reference")
        rows.append((region.id, region.source_text, reference))

    expected_ids = {line_id for line_id, _, _ in rows}
    if set(run.hypotheses) != expected_ids:
        missing = sorted(expected_ids - set(run.hypotheses))[:3]
        extra = sorted(set(run.hypotheses) - expected_ids)[:3]
        raise MetricError("alignment",
                          f"run/volume line mismatch (missing={missing}, "
                          f"extra={extra})")

    per_line: dict[str, dict[str, float]] = {line_id: {} for line_id, _, _ in rows}

    if "chrf" in which:
        for line_id, _, reference in rows:
            per_line[line_id]["chrf"] = chrf(run.hypotheses[line_id], reference,
                                             chrf_params)

    learned = [m for m in which if m in LEARNED_METRICS]
    if learned:
        if not scoring_endpoint:
            raise MetricError("backend",
                              "learned metrics need a scoring-service endpoint")
        client = ScoringClient(scoring_endpoint)
        for metric in learned:
            items = []
            for line_id, source, reference in rows:
                item = {"hypothesis": run.hypotheses[line_id],
                        "reference": reference}
                if metric == "xcomet":
                    item["source"] = source
                items.append(item)
            scores = client.score_batch(metric, items)
            for (line_id, _, _), score in zip(rows, scores):
                per_line[line_id][metric] = score

    per_volume: dict[str, float] = {}
    for metric in which:
        values = [per_line[line_id][metric] for line_id, _, _ in rows]
        if metric == "chrf" and aggregate == "corpus":
            pairs = [(run.hypotheses[line_id], reference)
                     for line_id, _, reference in rows]
            per_volume[metric] = corpus_chrf(pairs, chrf_params)
        else:
            per_volume[metric] = sum(values) / len(values) if values else 0.0

    metadata = {
        "approach": run.approach,
        "model": run.model,
        "date": date,
        "volume": run.volume_id,
        "lang": lang,
        "aggregate": aggregate,
        "config_digest": run.config_digest,
        "cassette_digest": run.cassette_digest,
    }
    return MetricReport(per_line=per_line, per_volume=per_volume, metadata=metadata)


def render_comparison_table(reports: list[MetricReport]) -> str:
    """Aligned text table over runs, best score per column marked bold."""
    if not reports:
        return "(no reports)"
    metrics: list[str] = []
    for report in reports:
        for metric in report.per_volume:
            if metric not in metrics:
                metrics.append(metric)
    rows = []
    for report in reports:
        label = report.metadata.get("approach", "?")
        rows.append((label, {m: report.per_volume.get(m) for m in metrics}))
    best = {m: max((row[1][m] for row in rows if row[1][m] is not None),
                   default=None)
            for m in metrics}

    def fmt(metric: str, value: float | None) -> str:
        if value is None:
            return "-"
        text = f"{value:.1f}" if metric == "chrf" else f"{value:.3f}"
        if best[metric] is not None and abs(value - best[metric]) < 1e-12:
            return f"**{text}**"
        return text

    header = ["Method"] + list(metrics)
    body = [[label] + [fmt(m, values[m]) for m in metrics]
            for label, values in rows]
    widths = [max(len(str(line[i])) for line in [header] + body)
              for i in range(len(header))]
    lines = [
        "  ".join(str(cell).ljust(width) for cell, width in zip(header, widths)),
        "  ".join("-" * width for width in widths),
    ]
    lines += ["  ".join(str(cell).ljust(width) for cell, width in zip(line, widths))
              for line in body]
    return "\n".join(lines)


def render_mqm_table(results: list[tuple[str, int, int, int, float]]) -> str:
    """Per-system MQM rows: minor/major/critical counts and the score."""
    header = ["System", "Minor", "Major", "Critical", "Score"]
    body = [[system, str(minor), str(major), str(critical), f"{score:.2f}"]
            for system, minor, major, critical, score in results]
    widths = [max(len(str(line[i])) for line in [header] + body)
              for i in range(len(header))]
    lines = [
        "  ".join(str(cell).ljust(width) for cell, width in zip(header, widths)),
        "  ".join("-" * width for width in widths),
    ]
    lines += ["  ".join(str(cell).ljust(width) for cell, width in zip(line, widths))
              for line in body]
    return "\n".join(lines)
