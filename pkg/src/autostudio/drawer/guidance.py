"""Guidance assembly: paste subject draws into a blank canvas, then noise it.

The composed guidance image holds every subject's generated pixels at its
layout box; forward diffusion projects it into latent space at every step so
the main denoise loop can inject it early.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..layout.geometry import rasterize_mask
from ..model import BoundingBox, FrameSize
from .schedule import DiffusionSchedule, derive_seed


@dataclass
class GuidanceSet:
    """Per-step noised guidance latents plus the composite subject mask."""

    frames: dict[int, np.ndarray]
    mask: np.ndarray
    source_image: np.ndarray

    def frame_at(self, t: int) -> np.ndarray:
        return self.frames[t]


def _resize_nearest(image: np.ndarray, height: int, width: int) -> np.ndarray:
    src_h, src_w = image.shape[:2]
    rows = np.minimum((np.arange(height) * src_h) // height, src_h - 1)
    cols = np.minimum((np.arange(width) * src_w) // width, src_w - 1)
    return image[rows[:, None], cols[None, :]]


def compose_guidance(
    segments: list[tuple[np.ndarray, BoundingBox]],
    frame: FrameSize,
    latent_h: int,
    latent_w: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Paste segment images back at their original boxes on a blank canvas.

    Returns (guidance image uint8, composite latent mask = union of the
    rasterized subject boxes). Segments are pasted in the given order; later
    segments win overlapping pixels.
    """
    canvas = np.zeros((frame.height, frame.width, 3), dtype=np.uint8)
    union = np.zeros((latent_h, latent_w), dtype=np.float64)
    for image, box in segments:
        x0 = int(round(max(box.x, 0)))
        y0 = int(round(max(box.y, 0)))
        x1 = int(round(min(box.right, frame.width)))
        y1 = int(round(min(box.bottom, frame.height)))
        if x1 <= x0 or y1 <= y0:
            continue
        canvas[y0:y1, x0:x1] = _resize_nearest(image, y1 - y0, x1 - x0)
        union = np.maximum(union, rasterize_mask(box, frame, latent_h, latent_w))
    return canvas, union


def forward_diffuse(
    guidance_image: np.ndarray,
    schedule: DiffusionSchedule,
    seed: int,
    *,
    encode,
    mask: np.ndarray,
) -> GuidanceSet:
    """Noise the encoded guidance image at every schedule step.

    Step 0 is the clean encoding, bit-exact. Noise comes from one seeded
    stream, so the whole set replays identically for the same seed.
    """
    z0 = encode(guidance_image)
    rng = np.random.default_rng(derive_seed(seed, "guidance-noise"))
    frames: dict[int, np.ndarray] = {0: z0.copy()}
    for t in range(1, schedule.steps):
        sig = schedule.signal_at(t)
        eps = rng.standard_normal(z0.shape)
        frames[t] = np.sqrt(sig) * z0 + np.sqrt(1.0 - sig) * eps
    return GuidanceSet(frames=frames, mask=mask, source_image=guidance_image)
