"""Interactive multi-turn image generation: agents, layouts, masked-attention drawer."""

__version__ = "0.1.0"

from .engine.config import EngineConfig
from .engine.pipeline import Engine, replay
from .model import BoundingBox, FrameSize, SubjectId
from .registry import EmbeddingVector, SubjectDatabase

__all__ = [
    "BoundingBox",
    "EmbeddingVector",
    "Engine",
    "EngineConfig",
    "FrameSize",
    "SubjectDatabase",
    "SubjectId",
    "__version__",
    "replay",
]
