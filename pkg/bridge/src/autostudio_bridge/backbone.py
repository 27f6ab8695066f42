"""Backbones behind /draw.

StubBackbone answers without any model weights: deterministic flat-color
renderings that satisfy the wire contract, used for CI and for wiring tests
against the engine. Real checkpoints live in diffusers_backbone.
"""

from __future__ import annotations

import base64
import hashlib
import io
import math

import numpy as np
from PIL import Image

from .config import BridgeConfig
from .wire import WIRE_SCHEMA


def _color_for(text: str) -> tuple[int, int, int]:
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return (64 + digest[0] % 160, 64 + digest[1] % 160, 64 + digest[2] % 160)


def _embedding_for(text: str, dim: int = 64) -> dict:
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    return {
        "values": [float(v) for v in rng.standard_normal(dim).round(6)],
        "dim": dim,
        "provenance": "bridge",
    }


def _png_b64(image: np.ndarray) -> str:
    buf = io.BytesIO()
    Image.fromarray(image).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def injection_steps(steps: int, r: float) -> list[int]:
    threshold = r * steps
    return [t for t in range(steps - 1, -1, -1) if t >= threshold]


class StubBackbone:
    """Weight-free renderer: colored boxes on a caption-keyed background."""

    name = "stub"

    def __init__(self, config: BridgeConfig):
        self.config = config

    def draw(self, request: dict) -> dict:
        frame = request["frame"]
        width, height = frame["width"], frame["height"]
        params = request["params"]
        image = np.empty((height, width, 3), dtype=np.uint8)
        image[:] = _color_for(request["global_caption"] + request["background_caption"])

        per_subject = []
        for subject in request["subjects"]:
            x, y, w, h = (int(round(v)) for v in subject["box"])
            x0, y0 = max(x, 0), max(y, 0)
            x1, y1 = min(x + w, width), min(y + h, height)
            if x1 > x0 and y1 > y0:
                image[y0:y1, x0:x1] = _color_for(subject["id"] + subject["caption"])
                for comp in subject.get("components", []):
                    cx, cy, cw, ch = (int(round(v)) for v in comp["box"])
                    cx0, cy0 = max(cx, 0), max(cy, 0)
                    cx1, cy1 = min(cx + cw, width), min(cy + ch, height)
                    if cx1 > cx0 and cy1 > cy0:
                        image[cy0:cy1, cx0:cx1] = _color_for(comp["id"] + comp["caption"])
            per_subject.append(
                {
                    "id": subject["id"],
                    "crop_box": subject["box"],
                    "embedding": subject.get("embedding") or _embedding_for(
                        subject["id"] + subject["caption"]
                    ),
                }
            )

        if request["mode"] == "edit" and request.get("prior_image"):
            prior = np.asarray(
                Image.open(io.BytesIO(base64.b64decode(request["prior_image"]))).convert("RGB")
            )
            if prior.shape == image.shape and request.get("edit_region"):
                x, y, w, h = (int(round(v)) for v in request["edit_region"])
                merged = prior.copy()
                merged[max(y, 0):y + h, max(x, 0):x + w] = image[max(y, 0):y + h, max(x, 0):x + w]
                image = merged

        guidance_on = params.get("guidance", "on") == "on" and bool(request["subjects"])
        steps = int(params["steps"])
        diagnostics = {
            "backbone": self.name,
            "schema": WIRE_SCHEMA,
            "mode": request["mode"],
            "guidance": "on" if guidance_on else "off",
            "params_echo": {
                "r": params["r"],
                "alpha": params["alpha"],
                "beta": params["beta"],
                "steps": steps,
            },
            "subject_steps": {
                s["id"]: math.ceil(steps / 10) for s in request["subjects"]
            } if guidance_on else {},
            "injected_steps": injection_steps(steps, float(params["r"])) if guidance_on else [],
        }
        return {
            "schema": WIRE_SCHEMA,
            "image": _png_b64(image),
            "per_subject": per_subject,
            "diagnostics": diagnostics,
        }


def make_backbone(config: BridgeConfig):
    if config.backbone == "stub":
        return StubBackbone(config)
    from .diffusers_backbone import DiffusersBackbone

    return DiffusersBackbone(config)
