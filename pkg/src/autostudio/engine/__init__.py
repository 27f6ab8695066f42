"""Session orchestration: per-turn pipeline, persistence, replay, HTTP service."""

from .config import EngineConfig, load_config
from .pipeline import Engine
from .session import Session, TurnRecord

__all__ = ["Engine", "EngineConfig", "Session", "TurnRecord", "load_config"]
