"""The layout line format: one ["description", [x, y, w, h], "id"] per line.

Input accepts single or double quotes and blank lines; output is canonical
(double quotes, single space after commas), so serialize(parse(text)) is
idempotent. A JSON form of the same data exists for the HTTP API and UI.
"""

from __future__ import annotations

import ast
import json

from ..errors import LayoutFormatError, MalformedId
from ..model import BoundingBox, FrameSize, LayoutEntry, ManagerOutput, RawLayout, SubjectId
from .rules import Violation, ViolationKind

DEFAULT_FRAME = FrameSize(1024, 1024)


def _format_violation(line_no: int, text: str, why: str) -> Violation:
    return Violation(
        kind=ViolationKind.FORMAT,
        ids=(),
        measure=float(line_no),
        message=f"line {line_no}: {why}: {text.strip()!r}",
    )


def _parse_line(line: str, line_no: int) -> LayoutEntry | Violation:
    try:
        value = ast.literal_eval(line.strip())
    except (ValueError, SyntaxError):
        return _format_violation(line_no, line, "not a bracketed triple")
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        return _format_violation(line_no, line, "expected [description, box, id]")
    desc, box, sid = value
    if not isinstance(desc, str) or not isinstance(sid, str):
        return _format_violation(line_no, line, "description and id must be quoted strings")
    if (
        not isinstance(box, (list, tuple))
        or len(box) != 4
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in box)
    ):
        return _format_violation(line_no, line, "box must be [x, y, w, h]")
    x, y, w, h = (float(v) for v in box)
    if w <= 0 or h <= 0:
        return _format_violation(line_no, line, "box sides must be positive")
    try:
        parsed_id = SubjectId.parse(sid)
    except MalformedId as exc:
        return _format_violation(line_no, line, str(exc))
    return LayoutEntry(description=desc, box=BoundingBox(x, y, w, h), id=parsed_id)


def parse_layout(
    text: str,
    frame: FrameSize = DEFAULT_FRAME,
    manager: ManagerOutput | None = None,
) -> RawLayout:
    """Parse layout lines into a RawLayout.

    Total on arbitrary text: every malformed line is collected and reported
    together in a LayoutFormatError carrying per-line findings.
    """
    entries: list[LayoutEntry] = []
    problems: list[Violation] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        result = _parse_line(line, line_no)
        if isinstance(result, Violation):
            problems.append(result)
        else:
            entries.append(result)
    known = {e.id.render() for e in entries}
    for e in entries:
        if e.id.is_component and e.id.parent.render() not in known:
            problems.append(
                _format_violation(0, e.id.render(), f"component {e.id} has no parent entry")
            )
    if problems:
        raise LayoutFormatError(problems)
    return RawLayout(frame=frame, entries=entries, manager=manager)


def serialize_layout(layout: RawLayout) -> str:
    """Render canonical lines: double quotes, single space after commas."""
    lines = [
        json.dumps([e.description, e.box.as_list(), e.id.render()]) for e in layout.entries
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def layout_to_json(layout: RawLayout) -> dict:
    return {
        "frame": {"width": layout.frame.width, "height": layout.frame.height},
        "entries": [
            {"description": e.description, "box": e.box.as_list(), "id": e.id.render()}
            for e in layout.entries
        ],
    }


def layout_from_json(doc: dict, manager: ManagerOutput | None = None) -> RawLayout:
    frame = FrameSize(int(doc["frame"]["width"]), int(doc["frame"]["height"]))
    entries = []
    problems = []
    for i, item in enumerate(doc.get("entries", []), start=1):
        box = item.get("box", [])
        if len(box) != 4:
            problems.append(_format_violation(i, str(item), "box must be [x, y, w, h]"))
            continue
        try:
            entries.append(
                LayoutEntry(
                    description=str(item["description"]),
                    box=BoundingBox(*(float(v) for v in box)),
                    id=SubjectId.parse(item["id"]),
                )
            )
        except (ValueError, KeyError, MalformedId) as exc:
            problems.append(_format_violation(i, str(item), str(exc)))
    if problems:
        raise LayoutFormatError(problems)
    return RawLayout(frame=frame, entries=entries, manager=manager)
