"""Subject extraction from generated canvases.

The full extractor chains an open-vocabulary detector and a segmenter; both
are heavyweight optional dependencies, so each wrapper degrades to the next
option and the last resort is a plain box crop (which keeps the guidance
pipeline correct, just without tight silhouettes).
"""

from __future__ import annotations

import logging

import numpy as np

logger = logging.getLogger(__name__)


class BoxExtractor:
    """Fallback: the subject's resized box is the crop, mask all ones."""

    detection = False
    segmentation = False

    def extract(self, image: np.ndarray, box: tuple[int, int, int, int], label: str):
        x, y, w, h = box
        crop = image[y:y + h, x:x + w]
        mask = np.ones(crop.shape[:2], dtype=np.uint8)
        return crop, mask


class DetectorExtractor(BoxExtractor):
    """Open-vocabulary detection (optionally plus segmentation) extraction."""

    def __init__(self, segment: bool = True):
        try:
            from groundingdino.util.inference import Model as DinoModel  # noqa: F401
        except ImportError as exc:
            raise RuntimeError(
                "detection extraction requires groundingdino; install the "
                "bridge 'real' extras and model weights"
            ) from exc
        self.detection = True
        self.segment = segment
        if segment:
            try:
                from segment_anything import SamPredictor  # noqa: F401
            except ImportError as exc:
                raise RuntimeError(
                    "segmentation requires segment-anything"
                ) from exc
            self.segmentation = True
        # model loading is deferred to first use; weights are environment-owned

    def extract(self, image, box, label):  # pragma: no cover - needs weights
        raise NotImplementedError(
            "detector-based extraction requires downloaded weights; "
            "run with extractor disabled to use box crops"
        )


def make_extractor(detection: bool, segmentation: bool):
    if detection:
        return DetectorExtractor(segment=segmentation)
    return BoxExtractor()
