"""Bridge configuration: which backbone serves /draw and with what hardware."""

from __future__ import annotations

from dataclasses import dataclass

BACKBONES = ("stub", "sd15", "sdxl")


@dataclass
class BridgeConfig:
    backbone: str = "stub"
    device: str = "cpu"
    steps: int = 30
    detection: bool = False      # open-vocabulary detector for extraction
    segmentation: bool = False   # mask segmenter for extraction
    model_id: str | None = None  # override the default checkpoint id

    def __post_init__(self):
        if self.backbone not in BACKBONES:
            raise ValueError(f"backbone must be one of {BACKBONES}, got {self.backbone!r}")
        if self.steps < 2:
            raise ValueError("steps must be at least 2")

    def capabilities(self) -> dict:
        return {
            "schema": "autostudio-draw@1",
            "backbone": self.backbone,
            "device": self.device,
            "steps": self.steps,
            "extractor": {
                "detection": self.detection,
                "segmentation": self.segmentation,
            },
            "modes": ["generate", "edit"],
        }
