"""Image synthesis: toy deterministic denoiser, guidance composition, wire protocol."""

from .guidance import GuidanceSet, compose_guidance, forward_diffuse
from .http_drawer import HttpDrawer
from .protocol import (
    DrawParams,
    DrawRequest,
    DrawResponse,
    DrawSubject,
    request_from_json,
    request_to_json,
    response_from_json,
    response_to_json,
    validate_request_json,
    validate_response_json,
)
from .schedule import DiffusionSchedule
from .toy import ToyDenoiser, ToyParams
from .toy_drawer import DrawArtifacts, PriorTurn, ToyDrawer

__all__ = [
    "DiffusionSchedule",
    "DrawArtifacts",
    "DrawParams",
    "DrawRequest",
    "DrawResponse",
    "DrawSubject",
    "GuidanceSet",
    "HttpDrawer",
    "PriorTurn",
    "ToyDenoiser",
    "ToyDrawer",
    "ToyParams",
    "compose_guidance",
    "forward_diffuse",
    "request_from_json",
    "request_to_json",
    "response_from_json",
    "response_to_json",
    "validate_request_json",
    "validate_response_json",
]
