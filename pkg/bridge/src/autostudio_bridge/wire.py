"""Vendored wire schemas and validation helpers.

The bridge never imports the engine package: the JSON schemas are the whole
contract between the two sides.
"""

from __future__ import annotations

import functools
import json
from importlib import resources

import jsonschema

WIRE_SCHEMA = "autostudio-draw@1"


class WireError(Exception):
    """Request or response does not satisfy the published schema."""


@functools.lru_cache(maxsize=None)
def _schema(name: str) -> dict:
    text = resources.files("autostudio_bridge.schemas").joinpath(name).read_text("utf-8")
    return json.loads(text)


def validate_request(doc: dict) -> None:
    if doc.get("schema") != WIRE_SCHEMA:
        raise WireError(f"unsupported schema version {doc.get('schema')!r}")
    try:
        jsonschema.validate(doc, _schema("draw_request.schema.json"))
    except jsonschema.ValidationError as exc:
        raise WireError(f"draw request: {exc.message}") from exc


def validate_response(doc: dict) -> None:
    try:
        jsonschema.validate(doc, _schema("draw_response.schema.json"))
    except jsonschema.ValidationError as exc:
        raise WireError(f"draw response: {exc.message}") from exc
