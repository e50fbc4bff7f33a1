"""Image preparation for multimodal prompts.

Covers the numbered-bubble page annotation, rectangle masking for the
visual-feature ablation, and JPEG encoding of request attachments.
Digits are rendered from a built-in 5x7 bitmap font scaled in integer
steps: no system font dependency, and identical pixels on every run,
which keeps annotated pages stable inside request hashes.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from PIL import Image

from .corpus import BBox, TextRegion
from .errors import GeometryError, ImageError

RGB = tuple[int, int, int]

NUMBERED_KINDS = ("speech_bubble", "narrative_box")

_DIGITS = {
    "0": (".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."),
    "1": ("..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."),
    "2": (".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"),
    "3": (".###.", "#...#", "....#", "..##.", "....#", "#...#", ".###."),
    "4": ("...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."),
    "5": ("#####", "#....", "####.", "....#", "....#", "#...#", ".###."),
    "6": (".###.", "#....", "####.", "#...#", "#...#", "#...#", ".###."),
    "7": ("#####", "....#", "...#.", "..#..", "..#..", "..#..", "..#.."),
    "8": (".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."),
    "9": (".###.", "#...#", "#...#", ".####", "....#", "....#", ".###."),
}
_GLYPH_H = 7
_GLYPH_W = 5


@dataclass(frozen=True)
class AnnotationStyle:
    fill: RGB = (255, 255, 255)
    number_color: RGB = (0, 0, 0)
    font_px: int = 28
    stroke_px: int = 0

    def __post_init__(self):
        if self.font_px <= 0:
            raise ValueError("font_px must be positive")
        for color in (self.fill, self.number_color):
            if len(color) != 3 or any(not 0 <= c <= 255 for c in color):
                raise ValueError(f"invalid RGB color {color!r}")


@dataclass(frozen=True)
class EncodedImage:
    """Request-ready image bytes (JPEG), longest side capped."""

    data: bytes
    format: str = "jpeg"
    max_side: int = 1536

    @cached_property
    def size(self) -> tuple[int, int]:
        with Image.open(io.BytesIO(self.data)) as img:
            return img.size


def load_image(path: str | Path) -> Image.Image:
    try:
        with Image.open(path) as img:
            return img.convert("RGB")
    except FileNotFoundError:
        raise
    except Exception as exc:  # Pillow raises a zoo of decode errors
        raise ImageError(f"cannot decode image {path}: {exc}") from exc


def render_number_mask(number: int, scale: int) -> np.ndarray:
    """Boolean pixel mask of a multi-digit number at an integer scale."""
    if number < 0:
        raise ValueError("number must be non-negative")
    if scale < 1:
        raise ValueError("scale must be >= 1")
    digits = str(number)
    width = len(digits) * _GLYPH_W + (len(digits) - 1)  # 1-cell gap
    grid = np.zeros((_GLYPH_H, width), dtype=bool)
    for pos, digit in enumerate(digits):
        glyph = _DIGITS[digit]
        x0 = pos * (_GLYPH_W + 1)
        for row, bits in enumerate(glyph):
            for col, bit in enumerate(bits):
                if bit == "#":
                    grid[row, x0 + col] = True
    return np.kron(grid, np.ones((scale, scale), dtype=bool))


def scale_for_font(font_px: int) -> int:
    return max(1, font_px // _GLYPH_H)


def _int_rect(bbox: BBox, width: int, height: int) -> tuple[int, int, int, int]:
    if not bbox.within(width, height):
        raise GeometryError(f"bbox {bbox.as_list()} outside {width}x{height} image")
    x0, y0 = int(math.floor(bbox.x)), int(math.floor(bbox.y))
    x1, y1 = int(math.ceil(bbox.right)), int(math.ceil(bbox.bottom))
    return x0, y0, x1, y1


def number_bubbles(image: Image.Image, regions: list[TextRegion],
                   style: AnnotationStyle | None = None,
                   kinds: tuple[str, ...] = NUMBERED_KINDS) -> Image.Image:
    """Clear bubble interiors and draw their 1-based reading numbers.

    Only regions whose kind is in ``kinds`` are touched (free text and
    SFX stay visible by default); every modified pixel lies inside a
    region bbox, so the rest of the page is bit-identical to the input.
    """
    style = style or AnnotationStyle()
    image = image.convert("RGB")
    arr = np.array(image)
    height, width = arr.shape[:2]
    for region in regions:
        if region.kind not in kinds:
            continue
        x0, y0, x1, y1 = _int_rect(region.bbox, width, height)
        arr[y0:y1, x0:x1] = style.fill
        if style.stroke_px > 0:
            s = min(style.stroke_px, (x1 - x0) // 2, (y1 - y0) // 2)
            arr[y0:y0 + s, x0:x1] = style.number_color
            arr[y1 - s:y1, x0:x1] = style.number_color
            arr[y0:y1, x0:x0 + s] = style.number_color
            arr[y0:y1, x1 - s:x1] = style.number_color

        number = region.reading_index + 1
        box_w, box_h = x1 - x0, y1 - y0
        scale = scale_for_font(style.font_px)
        mask = render_number_mask(number, scale)
        while scale > 1 and (mask.shape[0] > box_h or mask.shape[1] > box_w):
            scale -= 1
            mask = render_number_mask(number, scale)
        if mask.shape[0] > box_h or mask.shape[1] > box_w:
            mask = mask[:box_h, :box_w]  # degenerate boxes: clip, never overflow
        my = y0 + (box_h - mask.shape[0]) // 2
        mx = x0 + (box_w - mask.shape[1]) // 2
        target = arr[my:my + mask.shape[0], mx:mx + mask.shape[1]]
        target[mask] = style.number_color
    return Image.fromarray(arr)


def mask_regions(image: Image.Image, rects: list[BBox], fill: RGB) -> Image.Image:
    """Fill rectangle interiors with a flat color; all else untouched."""
    image = image.convert("RGB")
    arr = np.array(image)
    height, width = arr.shape[:2]
    for rect in rects:
        x0, y0, x1, y1 = _int_rect(rect, width, height)
        arr[y0:y1, x0:x1] = fill
    return Image.fromarray(arr)


def encode_for_request(image: Image.Image, max_side: int = 1536,
                       quality: int = 90) -> EncodedImage:
    """Downscale to ``max_side`` (aspect preserved) and encode as JPEG."""
    if image.width == 0 or image.height == 0:
        raise ImageError("cannot encode an empty image")
    if not 0 <= quality <= 100:
        raise ImageError(f"quality must be in 0..100, got {quality}")
    image = image.convert("RGB")
    longest = max(image.width, image.height)
    if longest > max_side:
        ratio = max_side / longest
        new_size = (max(1, round(image.width * ratio)),
                    max(1, round(image.height * ratio)))
        image = image.resize(new_size, Image.LANCZOS)
    buf = io.BytesIO()
    try:
        image.save(buf, format="JPEG", quality=quality)
    except OSError as exc:
        raise ImageError(f"JPEG encode failed: {exc}") from exc
    return EncodedImage(data=buf.getvalue(), format="jpeg", max_side=max_side)
