from __future__ import annotations

import hashlib
import io

import numpy as np
import pytest
from PIL import Image

from mangatl.corpus import BBox, TextRegion
from mangatl.errors import GeometryError, ImageError
from mangatl.imaging import (AnnotationStyle, encode_for_request, mask_regions,
                             number_bubbles, render_number_mask,
                             scale_for_font)


def noise_image(size=(200, 160), seed=5) -> Image.Image:
    rng = np.random.default_rng(seed)
    arr = rng.integers(0, 256, size=(size[1], size[0], 3), dtype=np.uint8)
    return Image.fromarray(arr, "RGB")


def bubble(idx: int, bbox, kind="speech_bubble") -> TextRegion:
    return TextRegion(id=f"r{idx}", bbox=BBox(*bbox), kind=kind,
                      source_text="x", reading_index=idx)


def test_zero_regions_identity():
    img = noise_image()
    out = number_bubbles(img, [])
    assert np.array_equal(np.array(out), np.array(img))


def test_single_bubble_fills_rect_and_preserves_outside():
    img = noise_image()
    style = AnnotationStyle(fill=(255, 255, 255), number_color=(0, 0, 0))
    out = number_bubbles(img, [bubble(0, (10, 10, 50, 30))], style)
    before, after = np.array(img), np.array(out)
    rect = after[10:40, 10:60].reshape(-1, 3)
    allowed = {(255, 255, 255), (0, 0, 0)}
    assert {tuple(px) for px in rect} <= allowed
    assert tuple(after[0, 0]) == tuple(before[0, 0])
    # complement is bit-identical
    complement = np.ones(before.shape[:2], dtype=bool)
    complement[10:40, 10:60] = False
    assert np.array_equal(before[complement], after[complement])


def test_numbers_decode_in_reading_order(demo_volume):
    page = demo_volume.pages[1]  # 4 bubbles in a 2x2 grid
    img = Image.open(page.image_path).convert("RGB")
    style = AnnotationStyle(font_px=28)
    out = np.array(number_bubbles(img, list(page.regions), style))
    scale = scale_for_font(style.font_px)
    for region in page.regions:
        number = region.reading_index + 1
        mask = render_number_mask(number, scale)
        x0, y0 = int(region.bbox.x), int(region.bbox.y)
        w, h = int(region.bbox.w), int(region.bbox.h)
        my = y0 + (h - mask.shape[0]) // 2
        mx = x0 + (w - mask.shape[1]) // 2
        window = out[my:my + mask.shape[0], mx:mx + mask.shape[1]]
        ink = (window == 0).all(axis=2)
        assert np.array_equal(ink, mask), f"number {number} does not match"
        # and no other digit template fits this window
        for other in range(1, len(page.regions) + 1):
            if other == number:
                continue
            other_mask = render_number_mask(other, scale)
            if other_mask.shape == ink.shape and np.array_equal(ink, other_mask):
                pytest.fail(f"window for {number} also matches {other}")


def test_free_text_and_sfx_untouched():
    img = noise_image()
    regions = [bubble(0, (10, 10, 40, 30)),
               bubble(1, (60, 10, 40, 30), kind="free_text"),
               bubble(2, (110, 10, 40, 30), kind="sfx")]
    out = np.array(number_bubbles(img, regions))
    before = np.array(img)
    assert np.array_equal(out[10:40, 60:100], before[10:40, 60:100])
    assert np.array_equal(out[10:40, 110:150], before[10:40, 110:150])
    assert not np.array_equal(out[10:40, 10:50], before[10:40, 10:50])


def test_number_bubbles_rejects_out_of_bounds():
    img = noise_image((50, 50))
    with pytest.raises(GeometryError):
        number_bubbles(img, [bubble(0, (40, 40, 20, 20))])


def test_number_bubbles_dimensions_and_input_untouched():
    img = noise_image()
    before = np.array(img)
    out = number_bubbles(img, [bubble(0, (10, 10, 50, 30))])
    assert out.size == img.size
    assert np.array_equal(np.array(img), before)


def test_stroke_frame():
    img = noise_image()
    style = AnnotationStyle(stroke_px=2)
    out = np.array(number_bubbles(img, [bubble(0, (10, 10, 50, 30))], style))
    assert (out[10:12, 10:60] == 0).all()
    assert (out[38:40, 10:60] == 0).all()


def test_mask_regions_empty_identity():
    img = noise_image()
    out = mask_regions(img, [], (0, 255, 0))
    assert np.array_equal(np.array(out), np.array(img))


def test_mask_regions_full_image_uniform():
    img = noise_image((64, 48))
    out = np.array(mask_regions(img, [BBox(0, 0, 64, 48)], (7, 8, 9)))
    assert (out == (7, 8, 9)).all()


def test_mask_regions_changed_pixel_count():
    img = noise_image()
    rect = BBox(30, 20, 70, 40)
    out = np.array(mask_regions(img, [rect], (1, 2, 3)))
    before = np.array(img)
    changed = (out != before).any(axis=2).sum()
    # noise image contains no (1,2,3) pixels inside the rect beforehand
    assert changed == rect.w * rect.h


def test_mask_regions_idempotent():
    img = noise_image()
    rects = [BBox(5, 5, 20, 20), BBox(50, 40, 30, 10)]
    once = mask_regions(img, rects, (0, 0, 0))
    twice = mask_regions(once, rects, (0, 0, 0))
    assert np.array_equal(np.array(once), np.array(twice))
    assert once.size == img.size


def test_complement_hash_invariant():
    img = noise_image()
    rects = [BBox(10, 10, 30, 30)]
    out = mask_regions(img, rects, (9, 9, 9))
    before, after = np.array(img), np.array(out)
    complement = np.ones(before.shape[:2], dtype=bool)
    complement[10:40, 10:40] = False
    assert (hashlib.sha256(before[complement].tobytes()).hexdigest()
            == hashlib.sha256(after[complement].tobytes()).hexdigest())


def test_encode_no_resize():
    encoded = encode_for_request(noise_image((100, 50)), max_side=200)
    assert encoded.size == (100, 50)
    assert encoded.format == "jpeg"


def test_encode_proportional_downscale():
    img = Image.new("RGB", (4000, 2000), (120, 130, 140))
    encoded = encode_for_request(img, max_side=2000)
    assert encoded.size == (2000, 1000)


def test_encode_decode_dimensions_match():
    for size in [(33, 77), (1536, 100), (640, 640)]:
        encoded = encode_for_request(noise_image(size), max_side=1536)
        with Image.open(io.BytesIO(encoded.data)) as decoded:
            assert decoded.size == encoded.size
            assert max(decoded.size) <= 1536


def test_encode_rejects_bad_quality():
    with pytest.raises(ImageError):
        encode_for_request(noise_image((10, 10)), quality=101)


def test_render_number_mask_shapes():
    one = render_number_mask(1, 1)
    assert one.shape == (7, 5)
    twelve = render_number_mask(12, 2)
    assert twelve.shape == (14, 22)  # two digits plus the gap, doubled
    with pytest.raises(ValueError):
        render_number_mask(-1, 1)
