"""Canonical data model for annotated manga volumes plus importers.

A volume on disk is one UTF-8 JSON manifest next to its page images.
The manifest lists pages in order; every page carries its panels and
text regions with reading order, source text and per-language
translations.  Volumes are immutable after loading and safe to share
across workers.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

from PIL import Image

from .errors import DataError, IngestError

logger = logging.getLogger(__name__)

REGION_KINDS = ("speech_bubble", "narrative_box", "free_text", "sfx")
SPLITS = ("validation", "test", "unsplit")

# Paper splits for the five-volume JA-EN benchmark corpus, keyed by
# normalized title.
OPENMANTRA_SPLITS = {
    "balloon_dream": "validation",
    "tojime_no_siora": "validation",
    "boureisougi": "test",
    "rasetugari": "test",
    "tencho_isoro": "test",
}


def slugify(text: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "_", text.lower()).strip("_")
    return slug or "untitled"


@dataclass(frozen=True)
class BBox:
    """Axis-aligned rectangle in pixel coordinates (x, y = top-left)."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"bbox sides must be positive, got w={self.w} h={self.h}")
        if self.x < 0 or self.y < 0:
            raise ValueError(f"bbox origin must be non-negative, got x={self.x} y={self.y}")

    @property
    def right(self) -> float:
        return self.x + self.w

    @property
    def bottom(self) -> float:
        return self.y + self.h

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    @property
    def area(self) -> float:
        return self.w * self.h

    def contains_point(self, x: float, y: float) -> bool:
        return self.x <= x <= self.right and self.y <= y <= self.bottom

    def within(self, width: float, height: float) -> bool:
        return self.x >= 0 and self.y >= 0 and self.right <= width and self.bottom <= height

    def as_list(self) -> list[float]:
        return [self.x, self.y, self.w, self.h]

    @classmethod
    def from_list(cls, raw) -> "BBox":
        if not isinstance(raw, (list, tuple)) or len(raw) != 4:
            raise ValueError(f"bbox must be [x, y, w, h], got {raw!r}")
        return cls(*[float(v) for v in raw])


@dataclass(frozen=True)
class TextRegion:
    """One line: a speech bubble, narrative box, free text or SFX cluster."""

    id: str
    bbox: BBox
    kind: str
    source_text: str
    reading_index: int
    translations: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in REGION_KINDS:
            raise ValueError(f"unknown region kind {self.kind!r}")
        if self.reading_index < 0:
            raise ValueError("reading_index must be non-negative")


@dataclass(frozen=True)
class Panel:
    id: str
    bbox: BBox


@dataclass(frozen=True)
class Page:
    index: int
    image_path: Path
    width: int
    height: int
    panels: tuple[Panel, ...]
    regions: tuple[TextRegion, ...]  # sorted by reading_index

    def region_by_id(self, region_id: str) -> TextRegion:
        for region in self.regions:
            if region.id == region_id:
                return region
        raise KeyError(region_id)


@dataclass(frozen=True)
class Volume:
    title: str
    language_source: str
    pages: tuple[Page, ...]
    split: str = "unsplit"

    @property
    def volume_id(self) -> str:
        return slugify(self.title)

    def iter_regions(self):
        """Yield (page, region) in global reading order."""
        for page in self.pages:
            for region in page.regions:
                yield page, region

    def line_ids(self) -> list[str]:
        return [region.id for _, region in self.iter_regions()]

    def region_by_id(self, region_id: str) -> tuple[Page, TextRegion]:
        for page, region in self.iter_regions():
            if region.id == region_id:
                return page, region
        raise KeyError(region_id)

    def line_count(self) -> int:
        return sum(len(page.regions) for page in self.pages)


def _parse_region(raw: dict, page_index: int, position: int) -> TextRegion:
    kind = raw.get("kind", "free_text")
    if kind not in REGION_KINDS:
        logger.warning("page %d region %r: unknown kind %r mapped to free_text",
                       page_index, raw.get("id"), kind)
        kind = "free_text"
    region_id = str(raw.get("id") or f"p{page_index:03d}_r{position:02d}")
    try:
        bbox = BBox.from_list(raw["bbox"])
    except (KeyError, ValueError, TypeError) as exc:
        raise IngestError("geometry", f"region {region_id}: {exc}") from exc
    source_text = raw.get("source_text", "")
    if not source_text and kind != "sfx":
        raise IngestError("format", f"region {region_id}: empty source_text for kind {kind}")
    reading_index = raw.get("reading_index")
    if not isinstance(reading_index, int) or reading_index < 0:
        raise IngestError("order_conflict",
                          f"region {region_id}: bad reading_index {reading_index!r}")
    translations = {str(k): str(v) for k, v in (raw.get("translations") or {}).items()}
    return TextRegion(id=region_id, bbox=bbox, kind=kind, source_text=source_text,
                      reading_index=reading_index, translations=translations)


def _parse_page(raw: dict, base_dir: Path) -> Page:
    index = raw.get("index")
    if not isinstance(index, int) or index < 0:
        raise IngestError("format", f"bad page index {index!r}")
    image_rel = raw.get("image")
    if not image_rel:
        raise IngestError("format", f"page {index}: missing image path")
    image_path = (base_dir / image_rel).resolve()
    if not image_path.is_file():
        raise IngestError("missing_asset", f"page {index}: image not found: {image_path}")
    width, height = raw.get("width"), raw.get("height")
    if not width or not height:
        with Image.open(image_path) as img:
            width, height = img.size

    panels = []
    for pos, praw in enumerate(raw.get("panels", [])):
        panel_id = str(praw.get("id") or f"p{index:03d}_panel{pos:02d}")
        try:
            bbox = BBox.from_list(praw["bbox"])
        except (KeyError, ValueError, TypeError) as exc:
            raise IngestError("geometry", f"panel {panel_id}: {exc}") from exc
        if not bbox.within(width, height):
            raise IngestError("geometry",
                              f"page {index}: panel {panel_id} outside image bounds")
        panels.append(Panel(id=panel_id, bbox=bbox))

    regions = [_parse_region(rraw, index, pos)
               for pos, rraw in enumerate(raw.get("regions", []))]
    for region in regions:
        if not region.bbox.within(width, height):
            raise IngestError("geometry",
                              f"page {index}: region {region.id} outside image bounds")
    indices = sorted(region.reading_index for region in regions)
    if indices != list(range(len(regions))):
        raise IngestError("order_conflict",
                          f"page {index}: reading_index values {indices} are not a "
                          f"permutation of 0..{len(regions) - 1}")
    regions.sort(key=lambda region: region.reading_index)
    return Page(index=index, image_path=image_path, width=int(width), height=int(height),
                panels=tuple(panels), regions=tuple(regions))


def load_volume(manifest_path: str | Path) -> Volume:
    """Load one canonical volume manifest, validating every invariant."""
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise IngestError("format", f"manifest not found: {manifest_path}")
    try:
        raw = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise IngestError("format", f"{manifest_path}: {exc}") from exc
    if not isinstance(raw, dict) or "pages" not in raw:
        raise IngestError("format", f"{manifest_path}: not a volume manifest")

    split = raw.get("split", "unsplit")
    if split not in SPLITS:
        raise IngestError("format", f"unknown split {split!r}")
    pages = [_parse_page(praw, manifest_path.parent) for praw in raw["pages"]]
    if not pages:
        raise IngestError("format", "volume has no pages")
    indices = [page.index for page in pages]
    if len(set(indices)) != len(indices):
        raise IngestError("format", f"duplicate page indices: {indices}")
    pages.sort(key=lambda page: page.index)
    return Volume(title=str(raw.get("title", manifest_path.stem)),
                  language_source=str(raw.get("language_source", "ja")),
                  pages=tuple(pages), split=split)


def save_volume(volume: Volume, manifest_path: str | Path) -> Path:
    """Write a canonical manifest; image paths stored relative when possible."""
    manifest_path = Path(manifest_path)
    base_dir = manifest_path.parent

    def rel_image(path: Path) -> str:
        try:
            return path.relative_to(base_dir.resolve()).as_posix()
        except ValueError:
            return str(path)

    doc = {
        "title": volume.title,
        "language_source": volume.language_source,
        "split": volume.split,
        "pages": [
            {
                "index": page.index,
                "image": rel_image(page.image_path),
                "width": page.width,
                "height": page.height,
                "panels": [{"id": panel.id, "bbox": panel.bbox.as_list()}
                           for panel in page.panels],
                "regions": [
                    {
                        "id": region.id,
                        "bbox": region.bbox.as_list(),
                        "kind": region.kind,
                        "source_text": region.source_text,
                        "reading_index": region.reading_index,
                        "translations": dict(sorted(region.translations.items())),
                    }
                    for region in page.regions
                ],
            }
            for page in volume.pages
        ],
    }
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    manifest_path.write_text(json.dumps(doc, ensure_ascii=False, indent=2) + "\n",
                             encoding="utf-8")
    return manifest_path


def parallel_pairs(volume: Volume, lang: str,
                   skip_missing: bool = False) -> list[tuple[str, str]]:
    """(source, reference) pairs in global reading order for one language."""
    pairs = []
    for _, region in volume.iter_regions():
        reference = region.translations.get(lang)
        if reference is None:
            if skip_missing:
                continue
            raise DataError("missing_reference",
                            f"region {region.id} has no {lang!r} translation")
        pairs.append((region.source_text, reference))
    return pairs


_OPENMANTRA_KINDS = {
    "speech": "speech_bubble",
    "speech_bubble": "speech_bubble",
    "narration": "narrative_box",
    "narrative_box": "narrative_box",
    "free": "free_text",
    "free_text": "free_text",
    "sfx": "sfx",
    "sound_effect": "sfx",
}


def _openmantra_volume(book: dict, root: Path) -> Volume:
    title = book.get("book_title") or book.get("title")
    if not title:
        raise IngestError("format", "book entry missing title")
    pages = []
    for praw in book.get("pages", []):
        page_index = praw.get("page_index", praw.get("index"))
        if page_index is None:
            raise IngestError("format", f"{title}: page missing index")
        image_paths = praw.get("image_paths") or {}
        image_rel = (image_paths.get("ja") or praw.get("image")
                     or next(iter(image_paths.values()), None))
        if not image_rel:
            raise IngestError("format", f"{title}: page {page_index} missing image path")
        image_path = (root / image_rel).resolve()
        if not image_path.is_file():
            raise IngestError("missing_asset", f"{title}: image not found: {image_path}")
        width, height = praw.get("width"), praw.get("height")
        if not width or not height:
            with Image.open(image_path) as img:
                width, height = img.size

        def clamped_bbox(raw_box: dict, what: str) -> BBox:
            # Foreign annotations occasionally overshoot the page by a few
            # pixels; clamp instead of rejecting the volume.
            try:
                x, y = float(raw_box["x"]), float(raw_box["y"])
                w, h = float(raw_box["w"]), float(raw_box["h"])
            except (KeyError, TypeError, ValueError) as exc:
                raise IngestError("geometry", f"{title}: {what}: {exc}") from exc
            cx, cy = max(x, 0.0), max(y, 0.0)
            cw, ch = min(w, width - cx), min(h, height - cy)
            if (cx, cy, cw, ch) != (x, y, w, h):
                logger.warning("%s page %s: %s clamped to page bounds",
                               title, page_index, what)
            try:
                return BBox(cx, cy, cw, ch)
            except ValueError as exc:
                raise IngestError("geometry", f"{title}: {what}: {exc}") from exc

        panels = []
        for pos, fraw in enumerate(praw.get("frame") or praw.get("frames")
                                   or praw.get("panels") or []):
            panels.append(Panel(id=f"p{page_index:03d}_panel{pos:02d}",
                                bbox=clamped_bbox(fraw, f"panel {pos}")))

        regions = []
        for pos, traw in enumerate(praw.get("text", [])):
            kind = _OPENMANTRA_KINDS.get(str(traw.get("kind", "speech")).lower())
            if kind is None:
                logger.warning("%s page %s: unknown kind %r mapped to free_text",
                               title, page_index, traw.get("kind"))
                kind = "free_text"
            translations = {}
            for key, value in traw.items():
                if key.startswith("text_") and key != "text_ja" and value is not None:
                    translations[key[len("text_"):]] = str(value)
            source = traw.get("text_ja", traw.get("text", ""))
            regions.append(TextRegion(
                id=f"p{page_index:03d}_r{pos:02d}",
                bbox=clamped_bbox(traw, f"text box {pos}"),
                kind=kind,
                source_text=str(source),
                reading_index=pos,  # annotation arrays are in reading order
                translations=translations,
            ))
        pages.append(Page(index=int(page_index), image_path=image_path,
                          width=int(width), height=int(height),
                          panels=tuple(panels), regions=tuple(regions)))
    if not pages:
        raise IngestError("format", f"{title}: volume has no pages")
    pages.sort(key=lambda page: page.index)
    split = OPENMANTRA_SPLITS.get(slugify(title), "unsplit")
    return Volume(title=str(title), language_source="ja",
                  pages=tuple(pages), split=split)


def import_openmantra(root: str | Path) -> list[Volume]:
    """Convert an OpenMantra-layout directory into canonical volumes.

    Expects ``annotation.json`` at the root with a ``books`` list; each
    book holds pages with ``image_paths``, ``text`` boxes (``x/y/w/h``,
    ``text_ja`` plus ``text_<lang>`` translations) and panel ``frame``
    rectangles.  The benchmark validation/test split is applied by title.
    """
    root = Path(root)
    annotation = root / "annotation.json"
    if not annotation.is_file():
        raise IngestError("format", f"no annotation.json under {root}")
    try:
        raw = json.loads(annotation.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise IngestError("format", f"{annotation}: {exc}") from exc
    books = raw.get("books")
    if not isinstance(books, list) or not books:
        raise IngestError("format", f"{annotation}: no books found")
    volumes = [_openmantra_volume(book, root) for book in books]
    volumes.sort(key=lambda volume: volume.volume_id)
    return volumes
