from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from autostudio.errors import MalformedId
from autostudio.model import BoundingBox, FrameSize, SubjectId


def test_parse_render_subject_and_component():
    assert SubjectId.parse("3").render() == "3"
    assert SubjectId.parse("3-2").render() == "3-2"
    assert SubjectId.parse("3-2").parent == SubjectId.parse("3")
    assert SubjectId.parse("3").parent is None


@pytest.mark.parametrize("bad", ["", "a", "1-2-3", "0", "1-0", "-1", "1--2", "1.5", "x-1"])
def test_malformed_ids_rejected(bad):
    with pytest.raises(MalformedId):
        SubjectId.parse(bad)


@given(st.lists(st.integers(min_value=1, max_value=999), min_size=1, max_size=2))
def test_round_trip_any_well_formed_id(path):
    rendered = "-".join(str(p) for p in path)
    assert SubjectId.parse(rendered).render() == rendered


def test_ids_order_by_path():
    ids = [SubjectId.parse(s) for s in ["2", "1-2", "1", "1-1"]]
    assert [i.render() for i in sorted(ids)] == ["1", "1-1", "1-2", "2"]


def test_box_rejects_degenerate_sides():
    with pytest.raises(ValueError):
        BoundingBox(0, 0, 0, 10)
    with pytest.raises(ValueError):
        BoundingBox(0, 0, 10, -1)


def test_frame_contains():
    frame = FrameSize(100, 50)
    assert frame.contains(BoundingBox(0, 0, 100, 50))
    assert not frame.contains(BoundingBox(1, 0, 100, 50))
