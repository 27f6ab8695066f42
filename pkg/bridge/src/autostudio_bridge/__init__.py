"""Adapter exposing real diffusion backbones behind the draw wire protocol."""

__version__ = "0.1.0"

from .config import BridgeConfig
from .service import create_app

__all__ = ["BridgeConfig", "create_app", "__version__"]
