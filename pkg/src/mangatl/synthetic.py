"""Bundled synthetic fixtures: a tiny annotated volume plus cassettes.

The demo volume is three deterministic drawn pages (stacked panels, a
2x2 grid, and a single wide panel) with Japanese lines and English and
Polish references, annotated in analytic reading order.  Scripted
"model" responses rendered from the references let every approach run
offline: recording them through the real gateway produces a cassette
whose keys match the requests the runner will rebuild at replay time.
"""

from __future__ import annotations

import json
from pathlib import Path

from PIL import Image, ImageDraw

from .config import RunConfig
from .corpus import Volume, load_volume, save_volume
from .gateway import Cassette, LlmGateway, ScriptedBackend
from .strategy import Approach, get_approach, plan_units, run_approach

DEMO_TITLE = "Synthetic Demo"
PAGE_SIZE = (420, 594)

# Per page: panel rects and regions (bbox, kind, reading_index, texts).
_DEMO_PAGES = [
    {
        "panels": [(10, 10, 400, 280), (10, 300, 400, 284)],
        "regions": [
            {"bbox": (30, 30, 150, 50), "kind": "narrative_box", "reading_index": 0,
             "ja": "朝の学校。", "en": "Morning at school.", "pl": "Poranek w szkole."},
            {"bbox": (250, 380, 130, 80), "kind": "speech_bubble", "reading_index": 1,
             "ja": "今日は試合の日だね。", "en": "Today's the day of the match.",
             "pl": "Dziś jest dzień meczu."},
        ],
    },
    {
        "panels": [(215, 10, 195, 282), (10, 10, 195, 282),
                   (215, 302, 195, 282), (10, 302, 195, 282)],
        "regions": [
            {"bbox": (240, 40, 140, 70), "kind": "speech_bubble", "reading_index": 0,
             "ja": "緊張してる？", "en": "Are you nervous?",
             "pl": "Denerwujesz się?"},
            {"bbox": (35, 40, 140, 70), "kind": "speech_bubble", "reading_index": 1,
             "ja": "全然。", "en": "Not at all.", "pl": "Wcale."},
            {"bbox": (240, 330, 140, 70), "kind": "speech_bubble", "reading_index": 2,
             "ja": "嘘だ、手が震えてるよ。", "en": "Liar, your hands are shaking.",
             "pl": "Kłamiesz, ręce ci się trzęsą."},
            {"bbox": (35, 330, 140, 70), "kind": "speech_bubble", "reading_index": 3,
             "ja": "うるさいな……", "en": "Oh, shut up...", "pl": "Cicho bądź..."},
        ],
    },
    {
        "panels": [(10, 10, 400, 574)],
        "regions": [
            {"bbox": (230, 60, 150, 80), "kind": "speech_bubble", "reading_index": 0,
             "ja": "始まるぞ！", "en": "It's starting!", "pl": "Zaczyna się!"},
            {"bbox": (40, 60, 150, 80), "kind": "speech_bubble", "reading_index": 1,
             "ja": "行こう。", "en": "Let's go.", "pl": "Chodźmy."},
        ],
    },
]


def _draw_page(spec: dict, path: Path) -> None:
    img = Image.new("RGB", PAGE_SIZE, (255, 255, 255))
    draw = ImageDraw.Draw(img)
    for px, py, pw, ph in spec["panels"]:
        draw.rectangle([px, py, px + pw - 1, py + ph - 1],
                       outline=(0, 0, 0), width=3)
        # deterministic hatching as a stand-in for artwork
        for offset in range(0, pw + ph, 24):
            draw.line([(px + min(offset, pw), py + max(0, offset - pw)),
                       (px + max(0, offset - ph), py + min(offset, ph))],
                      fill=(210, 210, 210), width=1)
    for region in spec["regions"]:
        x, y, w, h = region["bbox"]
        draw.ellipse([x, y, x + w - 1, y + h - 1],
                     fill=(250, 250, 250), outline=(40, 40, 40), width=2)
    img.save(path, format="PNG")


def build_demo_volume(root: str | Path, title: str = DEMO_TITLE) -> Path:
    """Write the demo volume (images + manifest) and return the manifest path."""
    root = Path(root)
    images = root / "images"
    images.mkdir(parents=True, exist_ok=True)
    pages_doc = []
    for index, spec in enumerate(_DEMO_PAGES):
        image_rel = f"images/p{index:03d}.png"
        _draw_page(spec, root / image_rel)
        pages_doc.append({
            "index": index,
            "image": image_rel,
            "width": PAGE_SIZE[0],
            "height": PAGE_SIZE[1],
            "panels": [{"id": f"p{index:03d}_panel{i:02d}", "bbox": list(rect)}
                       for i, rect in enumerate(spec["panels"])],
            "regions": [
                {
                    "id": f"p{index:03d}_r{i:02d}",
                    "bbox": list(region["bbox"]),
                    "kind": region["kind"],
                    "source_text": region["ja"],
                    "reading_index": region["reading_index"],
                    "translations": {"en": region["en"], "pl": region["pl"]},
                }
                for i, region in enumerate(spec["regions"])
            ],
        })
    manifest = root / "volume.json"
    manifest.write_text(json.dumps({
        "title": title,
        "language_source": "ja",
        "split": "unsplit",
        "pages": pages_doc,
    }, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    return manifest


# ---------------------------------------------------------------------------
# Response rendering per grammar (also used to fuzz the parsers)


def render_bracketed(translations: list[str]) -> str:
    return "\n".join(f"[{t}]" for t in translations)


def render_bracketed_expl(translations: list[str],
                          explanations: list[str]) -> str:
    return "\n".join(f"[{t}]({e})"
                     for t, e in zip(translations, explanations))


def render_cod_document(story_jp: str, story_en: str,
                        entries: list[dict]) -> str:
    return json.dumps({"story_jp": story_jp, "story_en": story_en,
                       "lines": entries}, ensure_ascii=False)


def render_pages_lines(pages: list[list[dict]]) -> str:
    return json.dumps({"pages": pages}, ensure_ascii=False)


def render_lines_document(entries: list[dict]) -> str:
    return json.dumps({"lines": entries}, ensure_ascii=False)


def render_pages_flat(pages: list[list[str]]) -> str:
    return json.dumps({"pages": pages}, ensure_ascii=False)


def render_cod_refinement(final_summary: str, entities: list[str]) -> str:
    summaries = [
        {"Informative_Entities": "; ".join(entities),
         "Denser_Summary": f"In this part of the story, {final_summary}"},
        {"Informative_Entities": "; ".join(entities),
         "Denser_Summary": f"So far: {final_summary}"},
        {"Informative_Entities": "; ".join(entities),
         "Denser_Summary": final_summary},
    ]
    return json.dumps({"summaries": summaries}, ensure_ascii=False)


# ---------------------------------------------------------------------------
# Scripted exchanges


def _page_refs(volume: Volume, position: int, lang: str) -> list[str]:
    return [region.translations[lang] for region in volume.pages[position].regions]


def _page_sources(volume: Volume, position: int) -> list[str]:
    return [region.source_text for region in volume.pages[position].regions]


def _entry(line: str, translation: str, position: int) -> dict:
    return {"line": line, "translation": translation,
            "reasoning": f"The panel art on page {position + 1} supports this reading."}


def _cod_story_pair(volume: Volume, position: int, lang: str) -> tuple[str, str]:
    story_jp = f"ページ{position + 1}。" + "".join(
        f"「{line}」" for line in _page_sources(volume, position))
    story_target = (f"Page {position + 1}: "
                    + " ".join(_page_refs(volume, position, lang)))
    return story_jp, story_target


def _cod_summary(volume: Volume, position: int, lang: str) -> str:
    parts = [_cod_story_pair(volume, k, lang)[1] for k in range(position + 1)]
    return " ".join(parts)


def scripted_exchange_texts(volume: Volume, approach: Approach,
                            lang: str) -> list[str]:
    """Response texts in the exact order the runner will request them."""
    units = plan_units(volume, approach, lang)
    texts: list[str] = []
    if approach.grammar == "bracketed":
        for unit in units:
            refs = [volume.region_by_id(line_id)[1].translations[lang]
                    for line_id in unit.line_ids]
            texts.append(render_bracketed(refs))
    elif approach.grammar == "bracketed_expl":
        for unit in units:
            refs = [volume.region_by_id(line_id)[1].translations[lang]
                    for line_id in unit.line_ids]
            expl = [f"The art around line {i + 1} matches this phrasing"
                    for i in range(len(refs))]
            texts.append(render_bracketed_expl(refs, expl))
    elif approach.grammar == "cod":
        for unit in units:
            position = unit.target_page
            story_jp, story_target = _cod_story_pair(volume, position, lang)
            entries = [
                {"line": region.source_text,
                 "speaker": "a student", "situation": "at school",
                 "translation": region.translations[lang],
                 "reasoning": f"Consistent with panel {i + 1}"}
                for i, region in enumerate(volume.pages[position].regions)
            ]
            texts.append(render_cod_document(story_jp, story_target, entries))
            texts.append(render_cod_refinement(
                _cod_summary(volume, position, lang), [f"page {position + 1}"]))
    elif approach.grammar == "pages_lines":
        for unit in units:
            pages = []
            for position in unit.page_indices:
                pages.append([
                    _entry(region.source_text, region.translations[lang], position)
                    for region in volume.pages[position].regions
                ])
            texts.append(render_pages_lines(pages))
    elif approach.grammar == "lines":
        for unit in units:
            position = unit.target_page
            entries = [_entry(region.source_text, region.translations[lang], position)
                       for region in volume.pages[position].regions]
            texts.append(render_lines_document(entries))
    elif approach.grammar == "pages_flat":
        pages = [[region.translations[lang] for region in page.regions]
                 for page in volume.pages]
        texts.append(render_pages_flat(pages))
    else:
        raise ValueError(f"unknown grammar {approach.grammar!r}")
    return texts


def record_scripted_cassette(volume: Volume, approaches: list[str],
                             config: RunConfig,
                             cassette_path: str | Path) -> Cassette:
    """Run each approach against scripted responses, recording a cassette."""
    cassette = Cassette(meta={"model": config.model,
                              "recorded_at": "2024-05-01T00:00:00Z"})
    for name in approaches:
        approach = get_approach(name)
        texts = iter(scripted_exchange_texts(volume, approach,
                                             config.target_lang))
        backend = ScriptedBackend(lambda request: next(texts),
                                  backend_id="scripted")
        gateway = LlmGateway(mode="record", backend=backend, cassette=cassette)
        run_approach(volume, approach, gateway, config)
    cassette.save(cassette_path)
    return cassette


def build_demo_workspace(root: str | Path,
                         approaches: list[str] | None = None,
                         target_lang: str = "en") -> tuple[Path, Path]:
    """Demo volume plus a cassette covering ``approaches`` (default: all)."""
    from .strategy import APPROACHES

    root = Path(root)
    manifest = build_demo_volume(root / "volume")
    volume = load_volume(manifest)
    save_volume(volume, manifest)  # normalize ordering
    volume = load_volume(manifest)
    cassette_path = root / "demo.cassette.json"
    config = RunConfig(mode="record", target_lang=target_lang)
    record_scripted_cassette(volume, approaches or list(APPROACHES),
                             config, cassette_path)
    return manifest, cassette_path
