"""Engine configuration: defaults, TOML files, environment overrides."""

from __future__ import annotations

import dataclasses
import os
import re
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from ..drawer.toy import ToyParams
from ..model import FrameSize

ENV_CHAT_ENDPOINT = "AUTOSTUDIO_CHAT_ENDPOINT"
ENV_CHAT_KEY = "AUTOSTUDIO_CHAT_KEY"
ENV_DRAW_ENDPOINT = "AUTOSTUDIO_DRAW_ENDPOINT"

_FRAME_RE = re.compile(r"^(\d+)x(\d+)$")


def parse_frame(text: str) -> FrameSize:
    match = _FRAME_RE.match(text.strip())
    if not match:
        raise ValueError(f"frame must look like 1024x1024, got {text!r}")
    return FrameSize(int(match.group(1)), int(match.group(2)))


@dataclass
class EngineConfig:
    """Everything a session needs to replay deterministically."""

    r: float = 0.95
    alpha: float = 0.2
    beta: float = 0.7
    steps: int = 30
    frame: FrameSize = field(default_factory=lambda: FrameSize(1024, 1024))
    seed: int = 0
    refine_rounds: int = 1
    backend: str = "mock"            # mock | http
    drawer: str = "toy"              # toy | http
    no_supervisor: bool = False
    alpha_one: bool = False
    guidance_off: bool = False
    max_turns: int = 20
    retries: int = 3
    strict: bool = True
    history_window: int = 0          # 0 = full history
    subject_workers: int = 0
    chat_endpoint: str | None = None
    chat_model: str = "gpt-4o"
    chat_key: str | None = None
    draw_endpoint: str | None = None
    transcript_path: str | None = None
    toy: ToyParams = field(default_factory=ToyParams)

    def __post_init__(self):
        if not 0.0 <= self.r <= 1.0:
            raise ValueError("r must lie in [0, 1]")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if self.steps < 2:
            raise ValueError("steps must be at least 2")
        if not 0 <= self.refine_rounds <= 3:
            raise ValueError("refine_rounds must be in 0..3")
        if self.max_turns < 1:
            raise ValueError("max_turns must be positive")
        if self.backend not in ("mock", "http"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.drawer not in ("toy", "http"):
            raise ValueError(f"unknown drawer {self.drawer!r}")

    def to_json(self) -> dict:
        doc = dataclasses.asdict(self)
        doc["frame"] = {"width": self.frame.width, "height": self.frame.height}
        doc["toy"] = dataclasses.asdict(self.toy)
        doc.pop("chat_key", None)  # never persist credentials
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "EngineConfig":
        doc = dict(doc)
        frame = doc.get("frame")
        if isinstance(frame, str):
            doc["frame"] = parse_frame(frame)
        elif isinstance(frame, dict):
            doc["frame"] = FrameSize(int(frame["width"]), int(frame["height"]))
        if isinstance(doc.get("toy"), dict):
            doc["toy"] = ToyParams(**doc["toy"])
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    def with_overrides(self, overrides: dict) -> "EngineConfig":
        merged = self.to_json()
        merged.update(overrides or {})
        merged.setdefault("chat_key", self.chat_key)
        return self.from_json(merged)


def load_config(path: str | None = None, overrides: dict | None = None) -> EngineConfig:
    """Build a config from an optional TOML file, env vars and overrides.

    Precedence: explicit overrides > environment > file > defaults.
    """
    doc: dict = {}
    if path:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    if os.environ.get(ENV_CHAT_ENDPOINT):
        doc["chat_endpoint"] = os.environ[ENV_CHAT_ENDPOINT]
    if os.environ.get(ENV_CHAT_KEY):
        doc["chat_key"] = os.environ[ENV_CHAT_KEY]
    if os.environ.get(ENV_DRAW_ENDPOINT):
        doc["draw_endpoint"] = os.environ[ENV_DRAW_ENDPOINT]
    doc.update(overrides or {})
    return EngineConfig.from_json(doc)
