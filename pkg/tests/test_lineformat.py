from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from autostudio.errors import LayoutFormatError
from autostudio.layout.lineformat import layout_from_json, layout_to_json, parse_layout, serialize_layout
from autostudio.model import FrameSize

HOUSE_LINES = (
    "['house', [0, 0, 400, 300], '1']\n"
    "['roof', [20, 15, 360, 120], '1-1']\n"
    "['Windows', [20, 150, 140, 135], '1-2']\n"
    "['Gate', [180, 150, 200, 135], '1-3']\n"
)

HOUSE_CANONICAL = (
    '["house", [0, 0, 400, 300], "1"]\n'
    '["roof", [20, 15, 360, 120], "1-1"]\n'
    '["Windows", [20, 150, 140, 135], "1-2"]\n'
    '["Gate", [180, 150, 200, 135], "1-3"]\n'
)


def test_house_example_parses():
    layout = parse_layout(HOUSE_LINES)
    assert len(layout.entries) == 4
    first = layout.entries[0]
    assert first.description == "house"
    assert (first.box.x, first.box.y, first.box.w, first.box.h) == (0, 0, 400, 300)
    assert first.id.render() == "1"
    assert [e.id.render() for e in layout.entries] == ["1", "1-1", "1-2", "1-3"]


def test_serialize_is_canonical_and_idempotent():
    once = serialize_layout(parse_layout(HOUSE_LINES))
    assert once == HOUSE_CANONICAL
    assert serialize_layout(parse_layout(once)) == once


def test_double_quotes_accepted():
    layout = parse_layout('["dog", [1, 2, 3, 4], "2"]')
    assert layout.entries[0].description == "dog"


def test_blank_lines_ignored():
    layout = parse_layout("\n\n['a', [0,0,10,10], '1']\n\n")
    assert len(layout.entries) == 1


def test_three_element_box_reports_line_number():
    text = "['a', [0, 0, 10, 10], '1']\n['b', [0, 0, 400], '2']"
    with pytest.raises(LayoutFormatError) as err:
        parse_layout(text)
    assert any("line 2" in v.message for v in err.value.violations)


def test_multiple_bad_lines_all_reported():
    text = "garbage\n['a', [0,0,10,10], '1']\n['b', [0,0,1], '2']\n"
    with pytest.raises(LayoutFormatError) as err:
        parse_layout(text)
    assert len(err.value.violations) == 2


def test_component_without_parent_entry_rejected():
    with pytest.raises(LayoutFormatError):
        parse_layout("['roof', [0, 0, 10, 10], '1-1']")


def test_bad_ids_rejected_per_line():
    with pytest.raises(LayoutFormatError):
        parse_layout("['a', [0, 0, 10, 10], 'one']")


@given(st.text(max_size=200))
def test_parser_total_on_arbitrary_text(text):
    try:
        parse_layout(text)
    except LayoutFormatError:
        pass


def test_round_trip_preserves_structure():
    layout = parse_layout(HOUSE_LINES, frame=FrameSize(800, 600))
    again = parse_layout(serialize_layout(layout), frame=FrameSize(800, 600))
    assert again.entries == layout.entries
    assert again.frame == layout.frame


def test_fractional_coordinates_survive():
    layout = parse_layout("['a', [0.5, 1.25, 10.75, 10], '1']")
    text = serialize_layout(layout)
    assert "[0.5, 1.25, 10.75, 10]" in text
    assert parse_layout(text).entries == layout.entries


def test_json_form_round_trip():
    layout = parse_layout(HOUSE_LINES, frame=FrameSize(640, 480))
    doc = layout_to_json(layout)
    assert doc["frame"] == {"width": 640, "height": 480}
    assert doc["entries"][0] == {"description": "house", "box": [0, 0, 400, 300], "id": "1"}
    back = layout_from_json(doc)
    assert back.entries == layout.entries
    assert back.frame == layout.frame


def test_quotes_inside_description():
    layout = parse_layout("[\"dog's bone, a chewed bone, on the grass\", [1, 2, 3, 4], '1']")
    assert layout.entries[0].description.startswith("dog's")
    again = parse_layout(serialize_layout(layout))
    assert again.entries == layout.entries
