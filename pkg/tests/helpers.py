"""Small builders shared across test modules."""

from __future__ import annotations

import json
from pathlib import Path

from PIL import Image

from mangatl.corpus import Volume, load_volume


def make_image(path: Path, size=(100, 150)) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.new("RGB", size, (255, 255, 255)).save(path)
    return path


def region(idx: int, bbox=(10, 10, 20, 20), **kw) -> dict:
    base = {"id": f"r{idx}", "bbox": list(bbox), "kind": "speech_bubble",
            "source_text": f"line{idx}", "reading_index": idx,
            "translations": {"en": f"line {idx}"}}
    base.update(kw)
    return base


def simple_page(root: Path, index=0, regions=None, panels=None,
                size=(100, 150)) -> dict:
    make_image(root / f"images/p{index}.png", size)
    return {"index": index, "image": f"images/p{index}.png",
            "width": size[0], "height": size[1],
            "panels": panels or [], "regions": regions or []}


def write_manifest(root: Path, pages: list[dict], **top) -> Path:
    doc = {"title": top.pop("title", "T"), "language_source": "ja",
           "split": top.pop("split", "unsplit"), "pages": pages, **top}
    path = root / "volume.json"
    path.write_text(json.dumps(doc, ensure_ascii=False), encoding="utf-8")
    return path


def tiny_volume(root: Path, lines_per_page=(1,), **region_kw) -> Volume:
    """Volume with the given number of regions on each page."""
    pages = []
    for index, count in enumerate(lines_per_page):
        regions = [region(i, bbox=(10, 10 + 30 * i, 20, 20), **region_kw)
                   for i in range(count)]
        for i, reg in enumerate(regions):
            reg["id"] = f"p{index:03d}_r{i:02d}"
        pages.append(simple_page(root, index=index, regions=regions))
    return load_volume(write_manifest(root, pages))
