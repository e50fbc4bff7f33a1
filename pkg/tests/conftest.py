from __future__ import annotations

import json
from pathlib import Path

import pytest
from PIL import Image

from mangatl.config import RunConfig
from mangatl.corpus import load_volume
from mangatl.synthetic import build_demo_workspace

# Benchmark corpus shape: title -> (pages, lines). The fixture mimics the
# real dataset's directory layout at 1/100th of the pixel budget.
OPENMANTRA_TABLE = {
    "balloon_dream": (38, 314),
    "boureisougi": (36, 274),
    "rasetugari": (54, 359),
    "tencho_isoro": (40, 311),
    "tojime_no_siora": (46, 334),
}


@pytest.fixture(scope="session")
def demo_workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("demo")
    manifest, cassette = build_demo_workspace(root)
    return {"root": root, "manifest": manifest, "cassette": cassette}


@pytest.fixture(scope="session")
def demo_volume(demo_workspace):
    return load_volume(demo_workspace["manifest"])


@pytest.fixture()
def replay_config(demo_workspace):
    return RunConfig(mode="replay", cassette=demo_workspace["cassette"])


def build_openmantra_tree(root: Path, titles=None) -> Path:
    """Write an OpenMantra-layout directory with the benchmark's counts."""
    titles = titles or list(OPENMANTRA_TABLE)
    width, height = 80, 120
    books = []
    for title in titles:
        page_count, line_count = OPENMANTRA_TABLE[title]
        image_dir = root / "images" / title
        image_dir.mkdir(parents=True, exist_ok=True)
        base, extra = divmod(line_count, page_count)
        pages = []
        line_no = 0
        for index in range(page_count):
            rel = f"images/{title}/{index:03d}.jpg"
            Image.new("RGB", (width, height), (255, 255, 255)).save(
                root / rel, format="JPEG")
            lines_here = base + (1 if index < extra else 0)
            text = []
            for j in range(lines_here):
                text.append({
                    "x": 4, "y": 2 + j * 12, "w": 30, "h": 10,
                    "text_ja": f"せりふ{line_no}",
                    "text_en": f"line {line_no}",
                    "text_zh": f"行{line_no}",
                })
                line_no += 1
            pages.append({
                "page_index": index,
                "image_paths": {"ja": rel},
                "width": width,
                "height": height,
                "frame": [{"x": 0, "y": 0, "w": width, "h": height}],
                "text": text,
            })
        books.append({"book_title": title, "pages": pages})
    (root / "annotation.json").write_text(
        json.dumps({"books": books}, ensure_ascii=False), encoding="utf-8")
    return root


@pytest.fixture(scope="session")
def openmantra_root(tmp_path_factory):
    return build_openmantra_tree(tmp_path_factory.mktemp("openmantra"))
