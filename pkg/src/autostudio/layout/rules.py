"""Deterministic layout validation against the supervisor rulebook.

All thresholds are ratios of the frame area, so non-square and non-1024
frames reuse the same rules. Violations are data, never exceptions: each
carries the violated measure so callers (and tests) can assert thresholds.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from ..model import BoundingBox, RawLayout, SubjectId
from .geometry import overlap_fraction


class ViolationKind(str, enum.Enum):
    OVERLAP = "Overlap"
    TOO_LARGE = "TooLarge"
    TOO_SMALL = "TooSmall"
    SIZE_SPREAD = "SizeSpread"
    ASPECT_RATIO = "AspectRatio"
    OUT_OF_FRAME = "OutOfFrame"
    COMPONENT_OUTSIDE_PARENT = "ComponentOutsideParent"
    COMPONENT_LAYOUT = "ComponentLayout"
    HEAD_BODY_RATIO = "HeadBodyRatio"
    FORMAT = "Format"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    ids: tuple[SubjectId, ...]
    measure: float
    message: str

    def sort_key(self):
        return (self.kind.value, tuple(i.render() for i in self.ids), self.measure)


# Keyword sets are heuristics standing in for semantic knowledge; override
# them on the Rulebook when captions use a different vocabulary.
HEAD_WORDS = frozenset({"head", "face", "hair", "facial"})
BODY_WORDS = frozenset({"body", "torso", "clothing", "clothes", "gown", "dress", "outfit", "shirt"})
ACCESSORY_WORDS = frozenset({"hat", "crown", "cap", "helmet", "tiara"})
PERSON_WORDS = frozenset({
    "person", "man", "woman", "boy", "girl", "child", "adult", "kid", "human",
    "princess", "prince", "knight", "wizard", "witch", "king", "queen", "lady",
    "gentleman", "farmer", "pirate", "astronaut",
})


@dataclass
class Rulebook:
    """Content rules for one frame. Defaults encode the 1024x1024 reference:
    max subject area half the frame, min a 25th, min at least a 6th of max,
    sides within 2x of each other, pairwise overlap at most 25%."""

    max_area_frac: float = 0.5
    min_area_frac: float = 1.0 / 25.0
    size_spread: float = 6.0
    aspect_max: float = 2.0
    overlap_max: float = 0.25
    head_frac: float = 0.3          # head:body = 3:7 of combined height
    head_frac_tol: float = 0.08
    touch_tol_frac: float = 0.01    # accessory adjacency tolerance, frame-relative
    head_words: frozenset[str] = HEAD_WORDS
    body_words: frozenset[str] = BODY_WORDS
    accessory_words: frozenset[str] = ACCESSORY_WORDS
    person_words: frozenset[str] = PERSON_WORDS

    def to_json(self) -> dict:
        return {
            "max_area_frac": self.max_area_frac,
            "min_area_frac": self.min_area_frac,
            "size_spread": self.size_spread,
            "aspect_max": self.aspect_max,
            "overlap_max": self.overlap_max,
            "head_frac": self.head_frac,
            "head_frac_tol": self.head_frac_tol,
            "touch_tol_frac": self.touch_tol_frac,
            "head_words": sorted(self.head_words),
            "body_words": sorted(self.body_words),
            "accessory_words": sorted(self.accessory_words),
            "person_words": sorted(self.person_words),
        }


DEFAULT_RULEBOOK = Rulebook()

_EPS = 1e-9


def _matches(description: str, words: frozenset[str]) -> bool:
    tokens = {t.strip(".,;:!?'\"()").lower() for t in description.split()}
    return bool(tokens & words)


def validate(layout: RawLayout, rules: Rulebook | None = None) -> list[Violation]:
    """All rulebook violations in the layout; empty iff compliant.

    Deterministic and order-independent: the violation multiset does not
    depend on entry order.
    """
    rules = rules or DEFAULT_RULEBOOK
    frame = layout.frame
    out: list[Violation] = []

    subjects = sorted(layout.subject_entries(), key=lambda e: e.id)
    max_area = rules.max_area_frac * frame.area
    min_area = rules.min_area_frac * frame.area

    for e in subjects:
        box = e.box
        if box.area > max_area + _EPS:
            out.append(Violation(
                ViolationKind.TOO_LARGE, (e.id,), box.area,
                f"subject {e.id} area {box.area:.0f} exceeds {max_area:.0f}",
            ))
        if box.area < min_area - _EPS:
            out.append(Violation(
                ViolationKind.TOO_SMALL, (e.id,), box.area,
                f"subject {e.id} area {box.area:.0f} below {min_area:.0f}",
            ))
        aspect = max(box.w, box.h) / min(box.w, box.h)
        if aspect > rules.aspect_max + _EPS:
            out.append(Violation(
                ViolationKind.ASPECT_RATIO, (e.id,), aspect,
                f"subject {e.id} aspect {aspect:.2f} exceeds {rules.aspect_max}",
            ))
        if not frame.contains(box):
            spill = max(0.0, -box.x) + max(0.0, -box.y) + \
                max(0.0, box.right - frame.width) + max(0.0, box.bottom - frame.height)
            out.append(Violation(
                ViolationKind.OUT_OF_FRAME, (e.id,), spill,
                f"subject {e.id} extends {spill:.0f}px outside the frame",
            ))

    if len(subjects) >= 2:
        largest = max(s.box.area for s in subjects)
        for e in subjects:
            if e.box.area * rules.size_spread < largest - _EPS:
                out.append(Violation(
                    ViolationKind.SIZE_SPREAD, (e.id,), e.box.area / largest,
                    f"subject {e.id} is smaller than 1/{rules.size_spread:.0f} "
                    f"of the largest subject",
                ))
        for i, a in enumerate(subjects):
            for b in subjects[i + 1:]:
                frac = overlap_fraction(a.box, b.box)
                if frac > rules.overlap_max + _EPS:
                    out.append(Violation(
                        ViolationKind.OVERLAP, (a.id, b.id), frac,
                        f"subjects {a.id} and {b.id} overlap by {frac:.0%}",
                    ))

    touch_tol = rules.touch_tol_frac * max(frame.width, frame.height)
    for parent in subjects:
        comps = sorted(layout.component_entries(parent.id), key=lambda e: e.id)
        for c in comps:
            if _is_accessory(c.description, rules):
                if not (_inside(parent.box, c.box) or
                        _touching_above(parent.box, c.box, touch_tol)):
                    out.append(Violation(
                        ViolationKind.COMPONENT_LAYOUT, (c.id,), _spill(parent.box, c.box),
                        f"accessory {c.id} is neither inside {parent.id} "
                        f"nor touching it from above",
                    ))
            elif not _inside(parent.box, c.box):
                out.append(Violation(
                    ViolationKind.COMPONENT_OUTSIDE_PARENT, (c.id,), _spill(parent.box, c.box),
                    f"component {c.id} extends outside subject {parent.id}",
                ))
        if _matches(parent.description, rules.person_words):
            out.extend(_head_body_check(parent.id, comps, rules))

    out.sort(key=Violation.sort_key)
    return out


def _is_accessory(description: str, rules: Rulebook) -> bool:
    return _matches(description, rules.accessory_words)


def _inside(parent: BoundingBox, child: BoundingBox) -> bool:
    return (
        child.x >= parent.x - _EPS
        and child.y >= parent.y - _EPS
        and child.right <= parent.right + _EPS
        and child.bottom <= parent.bottom + _EPS
    )


def _touching_above(parent: BoundingBox, child: BoundingBox, tol: float) -> bool:
    horizontal = min(child.right, parent.right) - max(child.x, parent.x) > 0
    return horizontal and abs(child.bottom - parent.y) <= tol and child.y < parent.y


def _spill(parent: BoundingBox, child: BoundingBox) -> float:
    return (
        max(0.0, parent.x - child.x)
        + max(0.0, parent.y - child.y)
        + max(0.0, child.right - parent.right)
        + max(0.0, child.bottom - parent.bottom)
    )


def _head_body_check(parent_id, comps, rules: Rulebook) -> list[Violation]:
    heads = [c for c in comps if _matches(c.description, rules.head_words)]
    bodies = [c for c in comps if _matches(c.description, rules.body_words)
              and not _matches(c.description, rules.head_words)]
    if not heads or not bodies:
        return []
    head, body = heads[0], bodies[0]
    frac = head.box.h / (head.box.h + body.box.h)
    if abs(frac - rules.head_frac) <= rules.head_frac_tol + _EPS:
        return []
    return [Violation(
        ViolationKind.HEAD_BODY_RATIO, (head.id, body.id), frac,
        f"head/body height split {frac:.2f} deviates from {rules.head_frac:.2f} "
        f"for subject {parent_id}",
    )]


@dataclass
class ValidationReport:
    """Convenience wrapper pairing a layout with its findings."""

    violations: list[Violation] = field(default_factory=list)

    @property
    def compliant(self) -> bool:
        return not self.violations
