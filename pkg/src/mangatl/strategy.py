"""The nine translation approaches: planning, prompting, parsing, running.

Each approach pairs a translation unit (line, page, volume) with a
textual and visual context budget.  Prompts are rendered from editable
text resources with ``{placeholder}`` slots; responses come back either
as bracketed spans or as JSON documents, depending on the approach, and
are parsed into per-line hypotheses.  The volume-by-page strategies are
sequential by contract: the chain-of-density one carries a rolling
target-language summary between pages, and the all-context one feeds
every prior hypothesis back into the next prompt.
"""

from __future__ import annotations

import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .config import RunConfig
from .corpus import Page, Volume
from .errors import GatewayError, ParseError, RequestError, RunError
from .gateway import LlmGateway, LlmRequest, Message, request_hash
from .imaging import AnnotationStyle, encode_for_request, load_image, number_bubbles

logger = logging.getLogger(__name__)

PROMPT_DIR = Path(__file__).resolve().parent / "prompts"

LANGUAGE_NAMES = {
    "en": "English",
    "pl": "Polish",
    "ja": "Japanese",
    "zh": "Chinese",
    "de": "German",
    "fr": "French",
    "es": "Spanish",
    "it": "Italian",
    "ko": "Korean",
}

UNITS = ("line", "page", "volume")
TEXTUAL_CONTEXTS = ("line", "page", "page_plus_summary", "three_pages",
                    "volume_plus_translations", "volume")
VISUAL_CONTEXTS = ("none", "page", "numbered_page", "three_pages", "volume")


@dataclass(frozen=True)
class Approach:
    name: str
    unit: str
    textual_context: str
    visual_context: str
    template: str
    grammar: str

    def __post_init__(self):
        if (self.unit not in UNITS or self.textual_context not in TEXTUAL_CONTEXTS
                or self.visual_context not in VISUAL_CONTEXTS):
            raise ValueError(f"invalid approach row {self}")


# One row per approach: unit, textual context, visual context.
APPROACHES = {
    "LBL": Approach("LBL", "line", "line", "none", "lbl.txt", "bracketed"),
    "PBP": Approach("PBP", "page", "page", "none", "pbp.txt", "bracketed"),
    "LBL_VIS": Approach("LBL_VIS", "line", "line", "page",
                        "lbl_vis.txt", "bracketed_expl"),
    "PBP_VIS": Approach("PBP_VIS", "page", "page", "page",
                        "pbp_vis.txt", "bracketed_expl"),
    "PBP_VIS_NUM": Approach("PBP_VIS_NUM", "page", "page", "numbered_page",
                            "pbp_vis_num.txt", "bracketed_expl"),
    "VBP_VIS_COD": Approach("VBP_VIS_COD", "page", "page_plus_summary", "page",
                            "vbp_vis_cod.txt", "cod"),
    "VBP_VIS_3P": Approach("VBP_VIS_3P", "page", "three_pages", "three_pages",
                           "vbp_vis_3p.txt", "pages_lines"),
    "VBP_VIS_ALL": Approach("VBP_VIS_ALL", "page", "volume_plus_translations",
                            "volume", "vbp_vis_all.txt", "lines"),
    "VBV_VIS": Approach("VBV_VIS", "volume", "volume", "volume",
                        "vbv_vis.txt", "pages_flat"),
}

SEQUENTIAL_APPROACHES = ("VBP_VIS_COD", "VBP_VIS_3P", "VBP_VIS_ALL", "VBV_VIS")


def get_approach(name: str) -> Approach:
    try:
        return APPROACHES[name.upper().replace("-", "_")]
    except KeyError:
        raise KeyError(f"unknown approach {name!r}; choose from "
                       f"{', '.join(APPROACHES)}") from None


def language_name(code: str) -> str:
    return LANGUAGE_NAMES.get(code.lower(), code)


_PLACEHOLDER = re.compile(r"\{([a-z][a-z0-9_]*)\}")


def render_template(template: str, mapping: dict[str, object]) -> str:
    """Substitute ``{name}`` slots present in the mapping; leave others."""
    def repl(match: re.Match) -> str:
        key = match.group(1)
        if key in mapping:
            return str(mapping[key])
        return match.group(0)

    return _PLACEHOLDER.sub(repl, template)


def load_template(name: str, prompt_dir: Path | None = None) -> str:
    for base in filter(None, (prompt_dir, PROMPT_DIR)):
        path = Path(base) / name
        if path.is_file():
            return path.read_text(encoding="utf-8").rstrip("\n")
    raise RequestError("template", f"prompt template {name} not found")


def load_example_set(lang: str, prompt_dir: Path | None = None) -> dict[str, str]:
    """One-shot example resource for a target language (editable)."""
    for base in filter(None, (prompt_dir, PROMPT_DIR)):
        path = Path(base) / "examples" / f"{lang.lower()}.json"
        if path.is_file():
            return json.loads(path.read_text(encoding="utf-8"))
    logger.warning("no one-shot example set for %r; falling back to en", lang)
    return json.loads((PROMPT_DIR / "examples" / "en.json").read_text(encoding="utf-8"))


@dataclass(frozen=True)
class TranslationUnit:
    """One request's worth of work; page indices are 0-based positions."""

    volume_id: str
    page_indices: tuple[int, ...]
    line_ids: tuple[str, ...]
    target_lang: str
    target_page: int | None = None

    def __post_init__(self):
        if self.target_page is not None and self.target_page not in self.page_indices:
            raise ValueError("target_page must be one of page_indices")


def plan_units(volume: Volume, approach: Approach,
               target_lang: str = "en") -> list[TranslationUnit]:
    """Translation units in execution order for one volume."""
    n_pages = len(volume.pages)
    all_pages = tuple(range(n_pages))
    units: list[TranslationUnit] = []
    if approach.unit == "line":
        for position, page in enumerate(volume.pages):
            for region in page.regions:
                units.append(TranslationUnit(
                    volume_id=volume.volume_id, page_indices=(position,),
                    line_ids=(region.id,), target_lang=target_lang,
                    target_page=position))
    elif approach.unit == "volume":
        units.append(TranslationUnit(
            volume_id=volume.volume_id, page_indices=all_pages,
            line_ids=tuple(volume.line_ids()), target_lang=target_lang))
    else:
        for position, page in enumerate(volume.pages):
            if approach.textual_context == "three_pages":
                window = tuple(i for i in (position - 1, position, position + 1)
                               if 0 <= i < n_pages)
            elif approach.textual_context == "volume_plus_translations":
                window = all_pages
            else:
                window = (position,)
            units.append(TranslationUnit(
                volume_id=volume.volume_id, page_indices=window,
                line_ids=tuple(region.id for region in page.regions),
                target_lang=target_lang, target_page=position))
    return units


@dataclass
class RollingSummary:
    """Fixed-budget target-language story summary carried across pages."""

    text: str = ""
    lmax: int = 150
    page_cursor: int = 0

    @property
    def word_count(self) -> int:
        return len(self.text.split())

    def within_soft_cap(self) -> bool:
        return self.word_count <= 1.5 * self.lmax


def _page_sources(page: Page) -> list[str]:
    return [region.source_text for region in page.regions]


def _numbered_lines(sources: list[str]) -> str:
    return "\n".join(f"Line {i + 1}: {text}" for i, text in enumerate(sources))


def _paged_block(volume: Volume, positions: tuple[int, ...],
                 relative: bool) -> str:
    blocks = []
    for slot, position in enumerate(positions):
        page = volume.pages[position]
        number = slot + 1 if relative else position + 1
        blocks.append(f"Page {number}:\n" + _numbered_lines(_page_sources(page)))
    return "\n\n".join(blocks)


def _translated_block(volume: Volume, prior: dict[int, list[str]]) -> str:
    blocks = []
    for position in sorted(prior):
        lines = "\n".join(f"Translation {i + 1}: {text}"
                          for i, text in enumerate(prior[position]))
        blocks.append(f"Page {position + 1}:\n" + lines)
    return "\n\n".join(blocks)


def _encode_page(page: Page, config: RunConfig):
    if not page.image_path.is_file():
        raise RequestError("missing_asset", f"page image missing: {page.image_path}")
    return encode_for_request(load_image(page.image_path),
                              max_side=config.max_side, quality=config.jpeg_quality)


def _request_images(unit: TranslationUnit, approach: Approach, volume: Volume,
                    config: RunConfig, style: AnnotationStyle | None):
    if approach.visual_context == "none":
        return ()
    if approach.visual_context in ("page", "numbered_page"):
        page = volume.pages[unit.target_page]
        if approach.visual_context == "numbered_page":
            if not page.image_path.is_file():
                raise RequestError("missing_asset",
                                   f"page image missing: {page.image_path}")
            annotated = number_bubbles(load_image(page.image_path),
                                       list(page.regions), style)
            return (encode_for_request(annotated, max_side=config.max_side,
                                       quality=config.jpeg_quality),)
        return (_encode_page(page, config),)
    # three_pages and volume attach every page in the unit's window
    return tuple(_encode_page(volume.pages[i], config) for i in unit.page_indices)


def build_request(unit: TranslationUnit, approach: Approach, volume: Volume,
                  examples: dict[str, str], config: RunConfig,
                  summary: RollingSummary | None = None,
                  prior_translations: dict[int, list[str]] | None = None,
                  style: AnnotationStyle | None = None) -> LlmRequest:
    """Render the approach's prompt and attach its visual context."""
    if (approach.name == "VBP_VIS_COD") != (summary is not None):
        raise ValueError("rolling summary is required exactly for VBP_VIS_COD")
    if (approach.name == "VBP_VIS_ALL") != (prior_translations is not None):
        raise ValueError("prior translations are required exactly for VBP_VIS_ALL")

    mapping: dict[str, object] = dict(examples)
    mapping["lang"] = language_name(unit.target_lang)

    if approach.unit == "line":
        page = volume.pages[unit.target_page]
        region = page.region_by_id(unit.line_ids[0])
        mapping["line"] = region.source_text
    elif approach.name in ("PBP", "PBP_VIS"):
        sources = _page_sources(volume.pages[unit.target_page])
        key = "line" if approach.name == "PBP" else "page"
        mapping[key] = "\n".join(sources)
    elif approach.name in ("PBP_VIS_NUM", "VBP_VIS_COD"):
        sources = _page_sources(volume.pages[unit.target_page])
        mapping["page"] = _numbered_lines(sources)
        if approach.name == "VBP_VIS_COD":
            mapping["lang_summary"] = summary.text
    elif approach.name == "VBP_VIS_3P":
        mapping["page"] = _paged_block(volume, unit.page_indices, relative=True)
    elif approach.name == "VBP_VIS_ALL":
        mapping["pages"] = _paged_block(volume, unit.page_indices, relative=False)
        mapping["no_pages"] = unit.target_page
        mapping["translated_pages"] = _translated_block(volume, prior_translations)
        mapping["curr_page"] = unit.target_page + 1
    elif approach.name == "VBV_VIS":
        mapping["pages"] = _paged_block(volume, unit.page_indices, relative=False)

    template = load_template(approach.template, config.prompt_dir)
    prompt = render_template(template, mapping)
    # The shipped prompts are written in English; when the target language
    # is neither English nor already named by the template, name it.
    if unit.target_lang.lower() != "en" and "{lang}" not in template:
        lines = prompt.split("\n")
        lines.insert(1, f"The target language for this translation is "
                        f"{language_name(unit.target_lang)}.")
        prompt = "\n".join(lines)

    images = _request_images(unit, approach, volume, config, style)
    return LlmRequest(model=config.model,
                      messages=(Message("user", prompt),),
                      images=images,
                      temperature=config.temperature,
                      max_output=config.max_output)


@dataclass
class ParsedTranslation:
    """Per-line fields extracted from one model response."""

    translations: list[str]
    explanations: list[str | None] | None = None
    reasonings: list[str | None] | None = None
    speakers: list[str | None] | None = None
    situations: list[str | None] | None = None
    story_source: str | None = None
    story_target: str | None = None
    pages: list[list[str]] | None = None


def _scan_bracketed(raw: str, with_explanations: bool):
    items: list[tuple[str, str | None]] = []
    i, n = 0, len(raw)
    while i < n:
        if raw[i] != "[":
            i += 1
            continue
        depth, j = 1, i + 1
        while j < n and depth:
            if raw[j] == "[":
                depth += 1
            elif raw[j] == "]":
                depth -= 1
            j += 1
        if depth:
            raise ParseError("format", "unbalanced square bracket")
        text = raw[i + 1:j - 1]
        explanation = None
        k = j
        while k < n and raw[k] in " \t":
            k += 1
        if with_explanations and k < n and raw[k] == "(":
            depth, m = 1, k + 1
            while m < n and depth:
                if raw[m] == "(":
                    depth += 1
                elif raw[m] == ")":
                    depth -= 1
                m += 1
            if depth:
                raise ParseError("format", "unbalanced parenthesis")
            explanation = raw[k + 1:m - 1].strip()
            j = m
        items.append((text.strip(), explanation))
        i = j
    return items


_FENCE = re.compile(r"```(?:json)?\s*(.*?)```", re.DOTALL)


def _extract_json(raw: str) -> dict:
    candidates = [raw.strip()]
    fence = _FENCE.search(raw)
    if fence:
        candidates.insert(0, fence.group(1).strip())
    first, last = raw.find("{"), raw.rfind("}")
    if first != -1 and last > first:
        candidates.append(raw[first:last + 1])
    for candidate in candidates:
        try:
            doc = json.loads(candidate)
        except json.JSONDecodeError:
            continue
        if isinstance(doc, dict):
            return doc
        raise ParseError("format", "response JSON is not an object")
    raise ParseError("format", "no JSON object found in response")


def _entry_str(entry: dict, key: str) -> str | None:
    value = entry.get(key)
    return None if value is None else str(value)


def _parse_dict_lines(entries, expected: int | None = None):
    if not isinstance(entries, list) or any(not isinstance(e, dict) for e in entries):
        raise ParseError("format", "'lines' must be a list of objects")
    translations, reasonings, speakers, situations = [], [], [], []
    for entry in entries:
        if "translation" not in entry:
            raise ParseError("format", "line entry missing 'translation'")
        translations.append(str(entry["translation"]))
        # the prompt text asks for "reasoning" but its inline example
        # shows "explanation"; accept either
        reasonings.append(_entry_str(entry, "reasoning")
                          if entry.get("reasoning") is not None
                          else _entry_str(entry, "explanation"))
        speakers.append(_entry_str(entry, "speaker"))
        situations.append(_entry_str(entry, "situation"))
    if expected is not None and len(translations) != expected:
        raise ParseError("count", got=len(translations), expected=expected)
    return translations, reasonings, speakers, situations


def parse_response(raw: str, approach: Approach,
                   expected_lines: int) -> ParsedTranslation:
    """Parse a response per the approach's grammar.

    Count mismatches and malformed structure raise :class:`ParseError`,
    a retryable signal.
    """
    if not raw:
        raise ParseError("format", "empty response")

    if approach.grammar in ("bracketed", "bracketed_expl"):
        items = _scan_bracketed(raw, approach.grammar == "bracketed_expl")
        if len(items) != expected_lines:
            raise ParseError("count", got=len(items), expected=expected_lines)
        translations = [text for text, _ in items]
        explanations = ([expl for _, expl in items]
                        if approach.grammar == "bracketed_expl" else None)
        return ParsedTranslation(translations=translations, explanations=explanations)

    doc = _extract_json(raw)

    if approach.grammar == "cod":
        for key in ("story_jp", "story_en", "lines"):
            if key not in doc:
                raise ParseError("format", f"missing key {key!r}")
        translations, reasonings, speakers, situations = _parse_dict_lines(
            doc["lines"], expected_lines)
        return ParsedTranslation(
            translations=translations, reasonings=reasonings,
            speakers=speakers, situations=situations,
            story_source=str(doc["story_jp"]), story_target=str(doc["story_en"]))

    if approach.grammar == "lines":
        if "lines" not in doc:
            raise ParseError("format", "missing key 'lines'")
        translations, reasonings, _, _ = _parse_dict_lines(doc["lines"], expected_lines)
        return ParsedTranslation(translations=translations, reasonings=reasonings)

    if approach.grammar == "pages_lines":
        pages_doc = doc.get("pages")
        if not isinstance(pages_doc, list) or any(not isinstance(p, list)
                                                  for p in pages_doc):
            raise ParseError("format", "'pages' must be a list of lists")
        pages, reasonings = [], []
        for page_entries in pages_doc:
            page_translations, page_reasonings, _, _ = _parse_dict_lines(page_entries)
            pages.append(page_translations)
            reasonings.extend(page_reasonings)
        translations = [t for page in pages for t in page]
        if len(translations) != expected_lines:
            raise ParseError("count", got=len(translations), expected=expected_lines)
        return ParsedTranslation(translations=translations,
                                 reasonings=reasonings, pages=pages)

    if approach.grammar == "pages_flat":
        pages_doc = doc.get("pages")
        if not isinstance(pages_doc, list) or any(not isinstance(p, list)
                                                  for p in pages_doc):
            raise ParseError("format", "'pages' must be a list of lists")
        pages = [[str(t) for t in page] for page in pages_doc]
        translations = [t for page in pages for t in page]
        if len(translations) != expected_lines:
            raise ParseError("count", got=len(translations), expected=expected_lines)
        return ParsedTranslation(translations=translations, pages=pages)

    raise ValueError(f"unknown grammar {approach.grammar!r}")


def cod_refine_request(summary: RollingSummary, observation: str,
                       target_lang: str, lmax: int,
                       config: RunConfig) -> LlmRequest:
    """Prompt that condenses the previous summary plus a new observation
    into three increasingly dense candidates."""
    template = load_template("cod_refine.txt", config.prompt_dir)
    prompt = render_template(template, {
        "prev_context": summary.text,
        "observation": observation,
        "lang": language_name(target_lang),
        "lmax": lmax,
    })
    return LlmRequest(model=config.model, messages=(Message("user", prompt),),
                      temperature=config.temperature, max_output=config.max_output)


def cod_apply(raw: str) -> str:
    """Pick the densest (third) summary out of a refinement response."""
    doc = _extract_json(raw)
    summaries = doc.get("summaries")
    if not isinstance(summaries, list) or len(summaries) != 3:
        got = len(summaries) if isinstance(summaries, list) else None
        raise ParseError("format", f"'summaries' must be a list of 3, got {got}")
    last = summaries[-1]
    if not isinstance(last, dict) or "Denser_Summary" not in last \
            or "Informative_Entities" not in last:
        raise ParseError("format", "summary entries need Informative_Entities "
                                   "and Denser_Summary")
    return str(last["Denser_Summary"])


@dataclass
class RequestRecord:
    unit_index: int
    kind: str  # translate | cod_refine
    page_indices: list[int]
    request_hash: str
    input_tokens: int = 0
    output_tokens: int = 0
    attempts: int = 1
    ok: bool = True


@dataclass
class TranslationRun:
    """Everything one strategy execution produced, keyed by line id."""

    approach: str
    volume_id: str
    model: str
    target_lang: str
    hypotheses: dict[str, str] = field(default_factory=dict)
    failed_lines: list[str] = field(default_factory=list)
    requests: list[RequestRecord] = field(default_factory=list)
    summary_trace: list[dict] = field(default_factory=list)
    config_digest: str = ""
    cassette_digest: str = ""
    recorded_at: str = ""

    @property
    def input_tokens(self) -> int:
        return sum(r.input_tokens for r in self.requests)

    @property
    def output_tokens(self) -> int:
        return sum(r.output_tokens for r in self.requests)

    def to_dict(self) -> dict:
        return {
            "schema": "mangatl/run/v1",
            "approach": self.approach,
            "volume_id": self.volume_id,
            "model": self.model,
            "target_lang": self.target_lang,
            "config_digest": self.config_digest,
            "cassette_digest": self.cassette_digest,
            "recorded_at": self.recorded_at,
            "totals": {"requests": len(self.requests),
                       "input_tokens": self.input_tokens,
                       "output_tokens": self.output_tokens},
            "hypotheses": self.hypotheses,
            "failed_lines": self.failed_lines,
            "requests": [vars(r).copy() for r in self.requests],
            "summary_trace": self.summary_trace,
        }

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), ensure_ascii=False, indent=2)
                        + "\n", encoding="utf-8")
        return path

    @classmethod
    def from_dict(cls, doc: dict) -> "TranslationRun":
        run = cls(approach=doc["approach"], volume_id=doc["volume_id"],
                  model=doc.get("model", ""), target_lang=doc.get("target_lang", "en"),
                  hypotheses=dict(doc.get("hypotheses", {})),
                  failed_lines=list(doc.get("failed_lines", [])),
                  config_digest=doc.get("config_digest", ""),
                  cassette_digest=doc.get("cassette_digest", ""),
                  recorded_at=doc.get("recorded_at", ""),
                  summary_trace=list(doc.get("summary_trace", [])))
        for rec in doc.get("requests", []):
            run.requests.append(RequestRecord(**rec))
        return run

    @classmethod
    def load(cls, path: str | Path) -> "TranslationRun":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _expected_lines(unit: TranslationUnit, approach: Approach,
                    volume: Volume) -> int:
    if approach.grammar in ("pages_lines", "pages_flat"):
        return sum(len(volume.pages[i].regions) for i in unit.page_indices)
    return len(unit.line_ids)


def _check_page_alignment(parsed: ParsedTranslation, unit: TranslationUnit,
                          volume: Volume) -> None:
    expected = [len(volume.pages[i].regions) for i in unit.page_indices]
    got = [len(page) for page in (parsed.pages or [])]
    if got != expected:
        raise ParseError("count", message=f"per-page line counts {got} != {expected}",
                         got=sum(got), expected=sum(expected))


class _UnitOutcome:
    def __init__(self, parsed: ParsedTranslation | None,
                 records: list[RequestRecord]):
        self.parsed = parsed
        self.records = records


def _execute(gateway: LlmGateway, request: LlmRequest, parse, unit_index: int,
             kind: str, page_indices, retries: int) -> tuple[object, RequestRecord]:
    """Send one request with the retry-on-ParseError policy.

    The identical request is re-sent (a sampled backend may answer
    differently); after the budget is exhausted the caller marks the
    unit's lines as failed.
    """
    record = RequestRecord(unit_index=unit_index, kind=kind,
                           page_indices=list(page_indices),
                           request_hash=request_hash(request))
    parsed = None
    for attempt in range(retries + 1):
        response = gateway.send(request)
        record.input_tokens = response.input_tokens
        record.output_tokens = response.output_tokens
        record.attempts = attempt + 1
        try:
            parsed = parse(response.text)
            break
        except ParseError as exc:
            logger.warning("unit %d %s attempt %d/%d: %s",
                           unit_index, kind, attempt + 1, retries + 1, exc)
    record.ok = parsed is not None
    return parsed, record


def run_approach(volume: Volume, approach: Approach, gateway: LlmGateway,
                 config: RunConfig) -> TranslationRun:
    """Execute every unit of an approach over a volume.

    Parse failures are retried up to ``config.retries`` times, after
    which the unit's lines are recorded as failed with empty hypotheses.
    Backend exhaustion raises :class:`RunError` carrying the partial run.
    """
    examples = load_example_set(config.target_lang, config.prompt_dir)
    units = plan_units(volume, approach, config.target_lang)
    recorded_at = (gateway.cassette.meta.get("recorded_at", "")
                   if gateway.cassette is not None else "")
    run = TranslationRun(approach=approach.name, volume_id=volume.volume_id,
                         model=config.model, target_lang=config.target_lang,
                         config_digest=config.digest(),
                         cassette_digest=gateway.cassette_digest(),
                         recorded_at=recorded_at)

    def fail_unit(unit: TranslationUnit):
        for line_id in unit.line_ids:
            run.hypotheses[line_id] = ""
        run.failed_lines.extend(unit.line_ids)

    def adopt(unit: TranslationUnit, translations: list[str]):
        for line_id, text in zip(unit.line_ids, translations):
            run.hypotheses[line_id] = text

    try:
        if approach.name == "VBP_VIS_COD":
            _run_cod(volume, approach, gateway, config, examples, units, run,
                     fail_unit, adopt)
        elif approach.name == "VBP_VIS_ALL":
            _run_all(volume, approach, gateway, config, examples, units, run,
                     fail_unit, adopt)
        elif approach.name == "VBV_VIS":
            _run_vbv(volume, approach, gateway, config, examples, units, run,
                     fail_unit)
        else:
            _run_independent(volume, approach, gateway, config, examples, units,
                             run, fail_unit, adopt)
    except GatewayError as exc:
        raise RunError("backend", str(exc), partial_run=run) from exc

    # keep artifacts ordered by global reading order
    ordered = {line_id: run.hypotheses.get(line_id, "")
               for line_id in volume.line_ids()}
    run.hypotheses = ordered
    return run


def _run_independent(volume, approach, gateway, config, examples, units, run,
                     fail_unit, adopt):
    def work(item):
        index, unit = item
        request = build_request(unit, approach, volume, examples, config)
        expected = _expected_lines(unit, approach, volume)

        def parse(text):
            parsed = parse_response(text, approach, expected)
            if approach.grammar == "pages_lines":
                _check_page_alignment(parsed, unit, volume)
            return parsed

        parsed, record = _execute(gateway, request, parse, index, "translate",
                                  unit.page_indices, config.retries)
        return index, unit, parsed, record

    items = list(enumerate(units))
    if config.workers > 1 and approach.name not in SEQUENTIAL_APPROACHES:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(work, items))
    else:
        outcomes = [work(item) for item in items]

    for index, unit, parsed, record in sorted(outcomes, key=lambda o: o[0]):
        run.requests.append(record)
        if parsed is None:
            fail_unit(unit)
        elif approach.grammar == "pages_lines":
            slot = unit.page_indices.index(unit.target_page)
            adopt(unit, parsed.pages[slot])
        else:
            adopt(unit, parsed.translations)


def _run_cod(volume, approach, gateway, config, examples, units, run,
             fail_unit, adopt):
    summary = RollingSummary(text="", lmax=config.lmax, page_cursor=0)
    for index, unit in enumerate(units):
        request = build_request(unit, approach, volume, examples, config,
                                summary=summary)
        expected = _expected_lines(unit, approach, volume)
        parsed, record = _execute(
            gateway, request, lambda text: parse_response(text, approach, expected),
            index, "translate", unit.page_indices, config.retries)
        run.requests.append(record)

        new_text = summary.text
        if parsed is None:
            fail_unit(unit)
        else:
            adopt(unit, parsed.translations)
            observation = parsed.story_target or ""
            refine = cod_refine_request(summary, observation, unit.target_lang,
                                        config.lmax, config)
            refined, refine_record = _execute(gateway, refine, cod_apply, index,
                                              "cod_refine", unit.page_indices,
                                              config.retries)
            run.requests.append(refine_record)
            if refined is not None:
                new_text = refined

        summary = RollingSummary(text=new_text, lmax=config.lmax,
                                 page_cursor=summary.page_cursor + 1)
        if not summary.within_soft_cap():
            logger.warning("rolling summary exceeds soft cap: %d words (lmax=%d)",
                           summary.word_count, summary.lmax)
        run.summary_trace.append({"page_cursor": summary.page_cursor,
                                  "words": summary.word_count,
                                  "text": summary.text})


def _run_all(volume, approach, gateway, config, examples, units, run,
             fail_unit, adopt):
    prior: dict[int, list[str]] = {}
    for index, unit in enumerate(units):
        request = build_request(unit, approach, volume, examples, config,
                                prior_translations=prior)
        expected = _expected_lines(unit, approach, volume)
        parsed, record = _execute(
            gateway, request, lambda text: parse_response(text, approach, expected),
            index, "translate", unit.page_indices, config.retries)
        run.requests.append(record)
        if parsed is None:
            fail_unit(unit)
            prior[unit.target_page] = ["" for _ in unit.line_ids]
        else:
            adopt(unit, parsed.translations)
            prior[unit.target_page] = list(parsed.translations)


def _run_vbv(volume, approach, gateway, config, examples, units, run, fail_unit):
    unit = units[0]
    request = build_request(unit, approach, volume, examples, config)
    expected = _expected_lines(unit, approach, volume)

    def parse(text):
        parsed = parse_response(text, approach, expected)
        _check_page_alignment(parsed, unit, volume)
        return parsed

    parsed, record = _execute(gateway, request, parse, 0, "translate",
                              unit.page_indices, config.retries)
    run.requests.append(record)
    if parsed is None:
        fail_unit(unit)
        return
    line_iter = iter(unit.line_ids)
    for page_translations in parsed.pages:
        for text in page_translations:
            run.hypotheses[next(line_iter)] = text
