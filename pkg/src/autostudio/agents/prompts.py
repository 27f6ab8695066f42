"""Prompt templating: static task instructions plus the slotted input envelope."""

from __future__ import annotations

import functools
from importlib import resources

from ..errors import MissingSlot

TEMPLATE_NAMES = ("manager", "layout", "supervisor")

_FILES = {
    "manager": "manager_prompt.txt",
    "layout": "layout_prompt.txt",
    "supervisor": "supervisor_prompt.txt",
}

_REQUIRED_SLOTS = {
    "manager": frozenset({"context", "content"}),
    "layout": frozenset({"size", "context", "content"}),
    "supervisor": frozenset({"size", "content"}),
}

_ENVELOPES = {
    "manager": "<input>\n<context>{context}</context>\n<content>{content}</content>\n</input>",
    "layout": (
        "<input>\n<size>{size}</size>\n<context>{context}</context>\n"
        "<content>{content}</content>\n</input>"
    ),
    "supervisor": "<input>\n<size>{size}</size>\n<content>{content}</content>\n</input>",
}


def _check_template(template: str) -> None:
    if template not in _FILES:
        raise MissingSlot(f"unknown template {template!r}; expected one of {TEMPLATE_NAMES}")


@functools.lru_cache(maxsize=None)
def system_text(template: str) -> str:
    """Full task instruction for one agent, loaded from the data files."""
    _check_template(template)
    return resources.files("autostudio.data").joinpath(_FILES[template]).read_text(encoding="utf-8")


def render_prompt(template: str, slots: dict[str, str]) -> str:
    """Embed slot values into the agent's input envelope.

    The slot set must match the template exactly: a missing slot or an
    unknown extra is a MissingSlot error (catching typos early).
    """
    _check_template(template)
    required = _REQUIRED_SLOTS[template]
    given = set(slots)
    if given != required:
        missing = sorted(required - given)
        extra = sorted(given - required)
        parts = []
        if missing:
            parts.append(f"missing {missing}")
        if extra:
            parts.append(f"unexpected {extra}")
        raise MissingSlot(f"template {template!r}: {', '.join(parts)}")
    return _ENVELOPES[template].format(**{k: str(v) for k, v in slots.items()})


def format_size(width: int, height: int) -> str:
    return f"[{width}, {height}]"
