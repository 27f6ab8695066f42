"""Parsing and canonical serialization of agent responses.

All parsers are total: anything that cannot be read raises ParseFailure with
a reason the caller can feed back to the backend on retry.
"""

from __future__ import annotations

import ast
import re

from ..errors import LayoutFormatError, MalformedId, ParseFailure
from ..layout.lineformat import parse_layout, serialize_layout
from ..model import (
    FrameSize,
    ManagerComponentEntry,
    ManagerOutput,
    ManagerSubjectEntry,
    RawLayout,
    SubjectId,
    SupervisorAdvice,
)

_OUTPUT_RE = re.compile(r"<output>(.*?)</output>", re.DOTALL)
_GLOBAL_RE = re.compile(r"<global>(.*?)</global>", re.DOTALL)
_BACKGROUND_RE = re.compile(r"<background>(.*?)</background>", re.DOTALL)
_ADVICE_RE = re.compile(r"<advice>(.*?)</advice>", re.DOTALL)


def _output_body(text: str) -> str:
    match = _OUTPUT_RE.search(text)
    return match.group(1) if match else text


def parse_manager_output(text: str) -> ManagerOutput:
    """Read global/background captions and the ["caption", "id"] entity lines.

    Component captions must carry the three comma-separated parts (naming,
    attribute, detail); the detail part may itself contain commas.
    """
    body = _output_body(text)
    global_match = _GLOBAL_RE.search(body)
    background_match = _BACKGROUND_RE.search(body)
    if not global_match or not background_match:
        raise ParseFailure("missing <global> or <background> caption")
    subjects: dict[str, ManagerSubjectEntry] = {}
    for line_no, line in enumerate(body.splitlines(), start=1):
        line = line.strip()
        if not line.startswith("["):
            continue
        try:
            value = ast.literal_eval(line)
        except (ValueError, SyntaxError):
            raise ParseFailure(f"line {line_no}: not a [\"caption\", \"id\"] pair") from None
        if not isinstance(value, (list, tuple)) or len(value) != 2:
            raise ParseFailure(f"line {line_no}: expected exactly [caption, id]")
        caption, raw_id = value
        if not isinstance(caption, str) or not isinstance(raw_id, str):
            raise ParseFailure(f"line {line_no}: caption and id must be strings")
        try:
            sid = SubjectId.parse(raw_id)
        except MalformedId as exc:
            raise ParseFailure(f"line {line_no}: {exc}") from None
        if sid.is_component:
            parent = sid.parent.render()
            if parent not in subjects:
                raise ParseFailure(f"line {line_no}: component {sid} before its subject")
            if len([s for s in caption.split(",") if s.strip()]) < 3:
                raise ParseFailure(
                    f"line {line_no}: component caption needs naming, attribute and "
                    f"detail parts separated by commas"
                )
            subjects[parent].components.append(ManagerComponentEntry(caption=caption, id=sid))
        else:
            if sid.render() in subjects:
                raise ParseFailure(f"line {line_no}: duplicate subject id {sid}")
            subjects[sid.render()] = ManagerSubjectEntry(caption=caption, id=sid)
    return ManagerOutput(
        global_caption=global_match.group(1).strip(),
        background_caption=background_match.group(1).strip(),
        subjects=list(subjects.values()),
    )


def serialize_manager_output(output: ManagerOutput) -> str:
    import json

    lines = [
        "<output>",
        f"<global>{output.global_caption}</global>",
        f"<background>{output.background_caption}</background>",
    ]
    for sub in output.subjects:
        lines.append(json.dumps([sub.caption, sub.id.render()]))
        for comp in sub.components:
            lines.append(json.dumps([comp.caption, comp.id.render()]))
    lines.append("</output>")
    return "\n".join(lines)


def serialize_layout_for_prompt(layout: RawLayout) -> str:
    return serialize_layout(layout).rstrip("\n")


def parse_layout_response(text: str, frame: FrameSize, manager: ManagerOutput | None) -> RawLayout:
    body = _output_body(text)
    lines = [ln for ln in body.splitlines() if ln.strip().startswith("[")]
    if not lines and manager is not None and manager.subjects:
        raise ParseFailure("no layout lines in response")
    try:
        return parse_layout("\n".join(lines), frame=frame, manager=manager)
    except LayoutFormatError as exc:
        raise ParseFailure(str(exc)) from exc


def parse_supervisor_advice(text: str, frame: FrameSize) -> SupervisorAdvice:
    """Extract the advice envelope; any layout lines inside become the
    revised layout."""
    match = _ADVICE_RE.search(text)
    if not match:
        raise ParseFailure("missing <output><advice>...</advice></output> envelope")
    body = match.group(1).strip()
    layout_lines = [ln for ln in body.splitlines() if ln.strip().startswith("[")]
    suggestions = [
        ln.strip(" -*")
        for ln in body.splitlines()
        if ln.strip() and not ln.strip().startswith("[")
    ]
    compliant = any(s.lower().rstrip(".") == "compliant" for s in suggestions)
    if compliant:
        suggestions = [s for s in suggestions if s.lower().rstrip(".") != "compliant"]
    if not compliant and not suggestions and not layout_lines:
        raise ParseFailure("advice is empty: expected suggestions or the compliant marker")
    revised = None
    if layout_lines:
        try:
            revised = parse_layout("\n".join(layout_lines), frame=frame)
        except LayoutFormatError as exc:
            raise ParseFailure(f"revised layout in advice is malformed: {exc}") from exc
    return SupervisorAdvice(suggestions=suggestions, revised_layout=revised, compliant=compliant)


def serialize_supervisor_advice(advice: SupervisorAdvice) -> str:
    parts = []
    if advice.compliant:
        parts.append("compliant")
    parts.extend(advice.suggestions)
    if advice.revised_layout is not None:
        parts.append(serialize_layout(advice.revised_layout).rstrip("\n"))
    body = "\n".join(parts)
    return f"<output>\n<advice>\n{body}\n</advice>\n</output>"
