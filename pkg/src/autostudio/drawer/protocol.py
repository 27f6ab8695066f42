"""Draw wire protocol: typed request/response plus JSON schema validation.

Any backend that speaks this schema can replace the toy drawer; the schema
files are the published contract and are versioned by the "schema" field.
"""

from __future__ import annotations

import base64
import functools
import json
from dataclasses import dataclass, field
from importlib import resources

import jsonschema

from ..errors import SchemaViolation
from ..model import BoundingBox, FrameSize, SubjectId
from ..registry import EmbeddingVector

WIRE_SCHEMA = "autostudio-draw@1"


@functools.lru_cache(maxsize=None)
def _schema(name: str) -> dict:
    text = resources.files("autostudio.data").joinpath(name).read_text(encoding="utf-8")
    return json.loads(text)


def validate_request_json(doc: dict) -> None:
    try:
        jsonschema.validate(doc, _schema("draw_request.schema.json"))
    except jsonschema.ValidationError as exc:
        raise SchemaViolation(f"draw request: {exc.message}") from exc


def validate_response_json(doc: dict) -> None:
    try:
        jsonschema.validate(doc, _schema("draw_response.schema.json"))
    except jsonschema.ValidationError as exc:
        raise SchemaViolation(f"draw response: {exc.message}") from exc


@dataclass
class DrawComponent:
    id: SubjectId
    caption: str
    box: BoundingBox


@dataclass
class DrawSubject:
    id: SubjectId
    caption: str
    box: BoundingBox
    components: list[DrawComponent] = field(default_factory=list)
    embedding: EmbeddingVector | None = None


@dataclass
class DrawParams:
    r: float = 0.95
    alpha: float = 0.2
    beta: float = 0.7
    steps: int = 30
    guidance: str = "on"
    model_seed: int | None = None


@dataclass
class DrawRequest:
    frame: FrameSize
    global_caption: str
    background_caption: str
    subjects: list[DrawSubject]
    seed: int
    mode: str = "generate"
    edit_region: BoundingBox | None = None
    prior_image: bytes | None = None
    params: DrawParams = field(default_factory=DrawParams)
    trace: bool = False


@dataclass
class PerSubjectResult:
    id: SubjectId
    crop_box: BoundingBox
    embedding: EmbeddingVector | None = None


@dataclass
class DrawResponse:
    image_png: bytes
    per_subject: list[PerSubjectResult]
    diagnostics: dict


def _box_json(box: BoundingBox) -> list:
    return box.as_list()


def _box_from(values) -> BoundingBox:
    return BoundingBox(*(float(v) for v in values))


def request_to_json(req: DrawRequest) -> dict:
    doc = {
        "schema": WIRE_SCHEMA,
        "frame": {"width": req.frame.width, "height": req.frame.height},
        "global_caption": req.global_caption,
        "background_caption": req.background_caption,
        "subjects": [],
        "seed": req.seed,
        "mode": req.mode,
        "params": {
            "r": req.params.r,
            "alpha": req.params.alpha,
            "beta": req.params.beta,
            "steps": req.params.steps,
            "guidance": req.params.guidance,
        },
    }
    if req.params.model_seed is not None:
        doc["params"]["model_seed"] = req.params.model_seed
    for sub in req.subjects:
        item = {
            "id": sub.id.render(),
            "caption": sub.caption,
            "box": _box_json(sub.box),
            "components": [
                {"id": c.id.render(), "caption": c.caption, "box": _box_json(c.box)}
                for c in sub.components
            ],
        }
        if sub.embedding is not None:
            item["embedding"] = sub.embedding.to_json()
        doc["subjects"].append(item)
    if req.edit_region is not None:
        doc["edit_region"] = _box_json(req.edit_region)
    if req.prior_image is not None:
        doc["prior_image"] = base64.b64encode(req.prior_image).decode("ascii")
    if req.trace:
        doc["trace"] = True
    return doc


def request_from_json(doc: dict) -> DrawRequest:
    validate_request_json(doc)
    params = doc["params"]
    subjects = []
    for item in doc["subjects"]:
        subjects.append(
            DrawSubject(
                id=SubjectId.parse(item["id"]),
                caption=item["caption"],
                box=_box_from(item["box"]),
                components=[
                    DrawComponent(
                        id=SubjectId.parse(c["id"]), caption=c["caption"], box=_box_from(c["box"])
                    )
                    for c in item.get("components", [])
                ],
                embedding=EmbeddingVector.from_json(item["embedding"])
                if item.get("embedding")
                else None,
            )
        )
    return DrawRequest(
        frame=FrameSize(doc["frame"]["width"], doc["frame"]["height"]),
        global_caption=doc["global_caption"],
        background_caption=doc["background_caption"],
        subjects=subjects,
        seed=int(doc["seed"]),
        mode=doc["mode"],
        edit_region=_box_from(doc["edit_region"]) if doc.get("edit_region") else None,
        prior_image=base64.b64decode(doc["prior_image"]) if doc.get("prior_image") else None,
        params=DrawParams(
            r=float(params["r"]),
            alpha=float(params["alpha"]),
            beta=float(params["beta"]),
            steps=int(params["steps"]),
            guidance=params.get("guidance", "on"),
            model_seed=params.get("model_seed"),
        ),
        trace=bool(doc.get("trace", False)),
    )


def response_to_json(resp: DrawResponse) -> dict:
    doc = {
        "schema": WIRE_SCHEMA,
        "image": base64.b64encode(resp.image_png).decode("ascii"),
        "per_subject": [],
        "diagnostics": resp.diagnostics,
    }
    for item in resp.per_subject:
        entry = {"id": item.id.render(), "crop_box": _box_json(item.crop_box)}
        if item.embedding is not None:
            entry["embedding"] = item.embedding.to_json()
        doc["per_subject"].append(entry)
    return doc


def response_from_json(doc: dict) -> DrawResponse:
    validate_response_json(doc)
    return DrawResponse(
        image_png=base64.b64decode(doc["image"]),
        per_subject=[
            PerSubjectResult(
                id=SubjectId.parse(item["id"]),
                crop_box=_box_from(item["crop_box"]),
                embedding=EmbeddingVector.from_json(item["embedding"])
                if item.get("embedding")
                else None,
            )
            for item in doc["per_subject"]
        ],
        diagnostics=doc["diagnostics"],
    )
