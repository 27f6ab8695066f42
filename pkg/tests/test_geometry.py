from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from autostudio.layout.geometry import (
    intersection_area,
    overlap_fraction,
    rasterize_mask,
    rasterize_mask_interior,
    resize_centered,
)
from autostudio.model import BoundingBox, FrameSize

boxes = st.builds(
    BoundingBox,
    x=st.integers(0, 900).map(float),
    y=st.integers(0, 900).map(float),
    w=st.integers(1, 400).map(float),
    h=st.integers(1, 400).map(float),
)


def pixel_grid_intersection(a: BoundingBox, b: BoundingBox) -> int:
    """Independent oracle: count unit lattice cells inside both integer boxes."""
    xs = np.arange(int(min(a.x, b.x)), int(max(a.right, b.right)))
    ys = np.arange(int(min(a.y, b.y)), int(max(a.bottom, b.bottom)))
    in_a = ((xs >= a.x) & (xs < a.right))[:, None] & ((ys >= a.y) & (ys < a.bottom))[None, :]
    in_b = ((xs >= b.x) & (xs < b.right))[:, None] & ((ys >= b.y) & (ys < b.bottom))[None, :]
    return int((in_a & in_b).sum())


def test_disjoint_boxes_have_zero_overlap():
    assert overlap_fraction(BoundingBox(0, 0, 100, 100), BoundingBox(200, 200, 50, 50)) == 0.0


def test_identical_boxes_overlap_fully():
    a = BoundingBox(10, 10, 80, 80)
    assert overlap_fraction(a, a) == 1.0


def test_half_shifted_box_overlaps_half():
    # expected value frozen from the pixel-grid oracle: 5000 shared cells / 10000
    a = BoundingBox(0, 0, 100, 100)
    b = BoundingBox(50, 0, 100, 100)
    assert pixel_grid_intersection(a, b) == 5000
    assert overlap_fraction(a, b) == pytest.approx(0.5)


@given(boxes, boxes)
def test_overlap_symmetric_and_bounded(a, b):
    f = overlap_fraction(a, b)
    assert f == overlap_fraction(b, a)
    assert 0.0 <= f <= 1.0


@settings(deadline=None)
@given(boxes, boxes)
def test_intersection_matches_pixel_oracle(a, b):
    assert abs(intersection_area(a, b) - pixel_grid_intersection(a, b)) <= 1.0


def test_resize_centered_wide_box():
    out = resize_centered(BoundingBox(100, 100, 200, 100), 1024)
    assert (out.w, out.h) == (1024, 512)
    assert (out.x, out.y) == (0, 256)


def test_resize_centered_square():
    out = resize_centered(BoundingBox(5, 5, 300, 300), 1024)
    assert (out.x, out.y, out.w, out.h) == (0, 0, 1024, 1024)


def test_resize_centered_already_at_target():
    out = resize_centered(BoundingBox(0, 0, 1024, 512), 1024)
    assert (out.w, out.h) == (1024, 512)
    assert (out.x, out.y) == (0, 256)


def brute_force_mask(box, frame, lh, lw):
    """Independent oracle: test every cell center explicitly."""
    mask = np.zeros((lh, lw))
    for r in range(lh):
        for c in range(lw):
            x = (c + 0.5) * frame.width / lw
            y = (r + 0.5) * frame.height / lh
            if box.x <= x < box.right and box.y <= y < box.bottom:
                mask[r, c] = 1
    return mask


def test_full_frame_box_rasterizes_to_ones():
    frame = FrameSize(1024, 1024)
    mask = rasterize_mask(BoundingBox(0, 0, 1024, 1024), frame, 32, 32)
    assert mask.all()


def test_left_half_box_sets_left_16_columns():
    frame = FrameSize(1024, 1024)
    box = BoundingBox(0, 0, 512, 1024)
    mask = rasterize_mask(box, frame, 32, 32)
    expected = brute_force_mask(box, frame, 32, 32)
    assert np.array_equal(mask, expected)
    assert mask[:, :16].all() and not mask[:, 16:].any()


def test_disjoint_boxes_give_disjoint_masks():
    frame = FrameSize(1024, 1024)
    m1 = rasterize_mask(BoundingBox(0, 0, 512, 1024), frame, 32, 32)
    m2 = rasterize_mask(BoundingBox(512, 0, 512, 1024), frame, 32, 32)
    assert not (m1 * m2).any()
    assert (m1 + m2).all()


@given(
    st.integers(0, 500), st.integers(0, 500), st.integers(10, 500), st.integers(10, 500),
    st.integers(1, 100), st.integers(1, 100),
)
def test_rasterize_matches_brute_force(x, y, w, h, dx, dy):
    frame = FrameSize(1024, 1024)
    box = BoundingBox(float(x), float(y), float(w), float(h))
    grown = BoundingBox(float(max(0, x - dx)), float(max(0, y - dy)),
                        float(w + 2 * dx), float(h + 2 * dy))
    m = rasterize_mask(box, frame, 16, 16)
    assert np.array_equal(m, brute_force_mask(box, frame, 16, 16))
    # monotonicity: enlarging the box never clears a set cell
    mg = rasterize_mask(grown, frame, 16, 16)
    assert (mg >= m).all()


def test_interior_rasterization_stays_inside_box():
    frame = FrameSize(256, 256)
    box = BoundingBox(30, 30, 100, 100)
    m = rasterize_mask_interior(box, frame, 32, 32)
    cell = 256 / 32
    rows, cols = np.nonzero(m)
    for r, c in zip(rows, cols):
        assert c * cell >= box.x and (c + 1) * cell <= box.right
        assert r * cell >= box.y and (r + 1) * cell <= box.bottom
    full = rasterize_mask_interior(BoundingBox(0, 0, 256, 256), frame, 32, 32)
    assert full.all()
