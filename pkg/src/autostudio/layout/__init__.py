"""Bounding-box geometry, line-format parsing, rulebook validation, refinement."""

from .geometry import overlap_fraction, rasterize_mask, rasterize_mask_interior, resize_centered
from .lineformat import layout_from_json, layout_to_json, parse_layout, serialize_layout
from .refine import refine_rule_based
from .rules import Rulebook, Violation, ViolationKind, validate

__all__ = [
    "Rulebook",
    "Violation",
    "ViolationKind",
    "layout_from_json",
    "layout_to_json",
    "overlap_fraction",
    "parse_layout",
    "rasterize_mask",
    "rasterize_mask_interior",
    "refine_rule_based",
    "resize_centered",
    "serialize_layout",
    "validate",
]
