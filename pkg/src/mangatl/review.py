"""Review bundles: the hand-off between a run and human MQM annotation.

A bundle packages every line of a run (source, reference, hypothesis,
page image and bbox) together with the issue taxonomy so the annotator
UI can work from static files alone.  Annotations come back as
MqmAnnotationSet files that the ``mqm-score`` command consumes.
"""

from __future__ import annotations

import hashlib
import json
import shutil
from pathlib import Path

from .corpus import Volume
from .errors import DataError
from .metrics import MqmAnnotationSet, taxonomy_as_list
from .strategy import TranslationRun

BUNDLE_SCHEMA = "mangatl/review-bundle/v1"


def default_word_count(run: TranslationRun) -> int:
    """Whitespace-token count over the evaluated (target-language) text."""
    return sum(len(text.split()) for text in run.hypotheses.values())


def run_id(run: TranslationRun) -> str:
    canon = json.dumps({"approach": run.approach, "volume": run.volume_id,
                        "config": run.config_digest,
                        "cassette": run.cassette_digest},
                       sort_keys=True)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]


def build_review_bundle(run: TranslationRun, volume: Volume, lang: str,
                        out_dir: str | Path) -> Path:
    """Write ``bundle.json`` plus page image copies under ``out_dir``."""
    out_dir = Path(out_dir)
    images_dir = out_dir / "images"
    images_dir.mkdir(parents=True, exist_ok=True)

    copied: dict[Path, str] = {}
    lines = []
    for page, region in volume.iter_regions():
        if region.id not in run.hypotheses:
            raise DataError("annotation",
                            f"run has no hypothesis for line {region.id}")
        if page.image_path not in copied:
            name = f"p{page.index:03d}{page.image_path.suffix or '.png'}"
            shutil.copyfile(page.image_path, images_dir / name)
            copied[page.image_path] = f"images/{name}"
        lines.append({
            "line_id": region.id,
            "page_index": page.index,
            "image": copied[page.image_path],
            "image_size": [page.width, page.height],
            "bbox": region.bbox.as_list(),
            "source": region.source_text,
            "reference": region.translations.get(lang),
            "hypothesis": run.hypotheses[region.id],
        })

    doc = {
        "schema": BUNDLE_SCHEMA,
        "provenance": {
            "run_id": run_id(run),
            "approach": run.approach,
            "volume": run.volume_id,
            "model": run.model,
            "config_digest": run.config_digest,
            "cassette_digest": run.cassette_digest,
        },
        "target_lang": lang,
        "word_count": default_word_count(run),
        "taxonomy": taxonomy_as_list(),
        "lines": lines,
    }
    bundle_path = out_dir / "bundle.json"
    bundle_path.write_text(json.dumps(doc, ensure_ascii=False, indent=2) + "\n",
                           encoding="utf-8")
    return bundle_path


_LINE_FIELDS = ("line_id", "page_index", "image", "bbox", "source", "hypothesis")


def load_review_bundle(path: str | Path) -> dict:
    """Load and validate a bundle, raising field-level errors."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError("annotation", f"{path}: {exc}") from exc
    if doc.get("schema") != BUNDLE_SCHEMA:
        raise DataError("annotation", f"{path}: unknown schema {doc.get('schema')!r}")
    lines = doc.get("lines")
    if not isinstance(lines, list) or not lines:
        raise DataError("annotation", f"{path}: bundle has no lines")
    seen = set()
    for i, line in enumerate(lines):
        for fld in _LINE_FIELDS:
            if fld not in line or line[fld] is None:
                raise DataError("annotation",
                                f"{path}: line {i} missing field {fld!r}")
        if line["line_id"] in seen:
            raise DataError("annotation",
                            f"{path}: duplicate line_id {line['line_id']!r}")
        seen.add(line["line_id"])
    if not isinstance(doc.get("word_count"), int) or doc["word_count"] < 0:
        raise DataError("annotation", f"{path}: bad word_count")
    return doc


def read_annotation_set(path: str | Path) -> MqmAnnotationSet:
    """Read an annotation file produced by the UI or written by hand."""
    return MqmAnnotationSet.load(path)
