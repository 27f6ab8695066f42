"""Pure box geometry: overlap, canvas resizing, latent-space rasterization."""

from __future__ import annotations

import numpy as np

from ..model import BoundingBox, FrameSize


def intersection_area(a: BoundingBox, b: BoundingBox) -> float:
    w = min(a.right, b.right) - max(a.x, b.x)
    h = min(a.bottom, b.bottom) - max(a.y, b.y)
    if w <= 0 or h <= 0:
        return 0.0
    return w * h


def overlap_fraction(a: BoundingBox, b: BoundingBox) -> float:
    """Overlap measured against the smaller box: intersection / min(area).

    Symmetric, in [0, 1], and 1 exactly when the smaller box lies inside
    the larger.
    """
    inter = intersection_area(a, b)
    if inter == 0.0:
        return 0.0
    return inter / min(a.area, b.area)


def resize_centered(box: BoundingBox, target_long_side: float) -> BoundingBox:
    """Scale the box so its long side hits the target, centered on a square
    canvas of that side length. Aspect ratio is preserved."""
    if target_long_side <= 0:
        raise ValueError("target side must be positive")
    scale = target_long_side / max(box.w, box.h)
    w, h = box.w * scale, box.h * scale
    return BoundingBox(x=(target_long_side - w) / 2, y=(target_long_side - h) / 2, w=w, h=h)


def rasterize_mask(box: BoundingBox, frame: FrameSize, latent_h: int, latent_w: int) -> np.ndarray:
    """Binary mask at latent resolution: a cell is set iff its center maps
    inside the box under uniform frame-to-latent scaling.

    Cell-center inclusion (half-open box interval) keeps masks of disjoint
    boxes disjoint and is monotone under box enlargement.
    """
    sx = frame.width / latent_w
    sy = frame.height / latent_h
    cx = (np.arange(latent_w) + 0.5) * sx
    cy = (np.arange(latent_h) + 0.5) * sy
    in_x = (cx >= box.x) & (cx < box.right)
    in_y = (cy >= box.y) & (cy < box.bottom)
    return (in_y[:, None] & in_x[None, :]).astype(np.float64)


def rasterize_mask_interior(
    box: BoundingBox, frame: FrameSize, latent_h: int, latent_w: int
) -> np.ndarray:
    """Strict variant: a cell is set only if it lies entirely inside the box.

    Used for edit regions, where regenerated cells must not spill pixels
    outside the requested region after decoding.
    """
    sx = frame.width / latent_w
    sy = frame.height / latent_h
    x0 = np.arange(latent_w) * sx
    y0 = np.arange(latent_h) * sy
    in_x = (x0 >= box.x) & (x0 + sx <= box.right)
    in_y = (y0 >= box.y) & (y0 + sy <= box.bottom)
    return (in_y[:, None] & in_x[None, :]).astype(np.float64)
