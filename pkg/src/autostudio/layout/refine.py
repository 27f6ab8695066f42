"""Deterministic fallback refiner: mechanically repairs rulebook violations.

Runs when the supervisor loop leaves a non-compliant layout. Each pass fixes
what it can (translate apart, clamp, rescale about center, re-split
head/body); a pass that does not strictly reduce the violation count is
discarded, so the result never has more violations than the input.
"""

from __future__ import annotations

from dataclasses import replace

from ..errors import Unsatisfiable
from ..model import BoundingBox, FrameSize, RawLayout, SubjectId
from .geometry import intersection_area
from .rules import DEFAULT_RULEBOOK, Rulebook, Violation, ViolationKind, validate, _matches

MAX_PASSES = 10
_MARGIN = 1e-6


def refine_rule_based(
    layout: RawLayout,
    violations: list[Violation] | None = None,
    rules: Rulebook | None = None,
) -> RawLayout:
    """Repair the layout until compliant or until no pass improves it.

    Raises Unsatisfiable when the subjects cannot all fit the frame at the
    rulebook's minimum size.
    """
    rules = rules or DEFAULT_RULEBOOK
    if violations is None:
        violations = validate(layout, rules)
    if not violations:
        return layout

    n_subjects = len(layout.subject_entries())
    if n_subjects * rules.min_area_frac > 1.0 + _MARGIN:
        raise Unsatisfiable(
            f"{n_subjects} subjects at minimum area cannot fit the frame"
        )

    current, current_v = layout, violations
    for _ in range(MAX_PASSES):
        if not current_v:
            break
        candidate = _one_pass(current, current_v, rules)
        candidate_v = validate(candidate, rules)
        if len(candidate_v) >= len(current_v):
            break
        current, current_v = candidate, candidate_v
    return current


class _Boxes:
    """Mutable box state for one pass; subject moves drag components along."""

    def __init__(self, layout: RawLayout):
        self.layout = layout
        self.box: dict[str, BoundingBox] = {e.id.render(): e.box for e in layout.entries}
        self.children: dict[str, list[str]] = {}
        for e in layout.entries:
            if e.id.is_component:
                self.children.setdefault(e.id.parent.render(), []).append(e.id.render())

    def get(self, sid: SubjectId) -> BoundingBox:
        return self.box[sid.render()]

    def set_subject(self, sid: SubjectId, new: BoundingBox) -> None:
        """Replace a subject box; components follow the same affine map."""
        key = sid.render()
        old = self.box[key]
        self.box[key] = new
        sx, sy = new.w / old.w, new.h / old.h
        for child in self.children.get(key, []):
            c = self.box[child]
            self.box[child] = BoundingBox(
                x=new.x + (c.x - old.x) * sx,
                y=new.y + (c.y - old.y) * sy,
                w=max(c.w * sx, 1e-6),
                h=max(c.h * sy, 1e-6),
            )

    def set_component(self, sid: SubjectId, new: BoundingBox) -> None:
        self.box[sid.render()] = new

    def rebuild(self) -> RawLayout:
        entries = [replace(e, box=self.box[e.id.render()]) for e in self.layout.entries]
        return RawLayout(frame=self.layout.frame, entries=entries, manager=self.layout.manager)


def _one_pass(layout: RawLayout, violations: list[Violation], rules: Rulebook) -> RawLayout:
    frame = layout.frame
    state = _Boxes(layout)
    order = [
        ViolationKind.OUT_OF_FRAME,
        ViolationKind.TOO_LARGE,
        ViolationKind.ASPECT_RATIO,
        ViolationKind.TOO_SMALL,
        ViolationKind.SIZE_SPREAD,
        ViolationKind.HEAD_BODY_RATIO,
        ViolationKind.COMPONENT_OUTSIDE_PARENT,
        ViolationKind.COMPONENT_LAYOUT,
        ViolationKind.OVERLAP,
    ]
    for kind in order:
        for v in violations:
            if v.kind != kind:
                continue
            _apply_fix(state, v, frame, rules)
    return state.rebuild()


def _apply_fix(state: _Boxes, v: Violation, frame: FrameSize, rules: Rulebook) -> None:
    kind = v.kind
    if kind == ViolationKind.OUT_OF_FRAME:
        sid = v.ids[0]
        state.set_subject(sid, _clamp_into(state.get(sid), frame))
    elif kind == ViolationKind.TOO_LARGE:
        sid = v.ids[0]
        box = state.get(sid)
        s = (rules.max_area_frac * frame.area / box.area) ** 0.5 * (1 - 1e-9)
        state.set_subject(sid, _clamp_into(_scale_centered(box, s, s), frame))
    elif kind == ViolationKind.TOO_SMALL:
        sid = v.ids[0]
        box = state.get(sid)
        s = (rules.min_area_frac * frame.area / box.area) ** 0.5 * (1 + 1e-9)
        state.set_subject(sid, _clamp_into(_scale_centered(box, s, s), frame))
    elif kind == ViolationKind.SIZE_SPREAD:
        sid = v.ids[0]
        box = state.get(sid)
        largest = max(
            state.get(e.id).area for e in state.layout.subject_entries()
        )
        s = (largest / rules.size_spread / box.area) ** 0.5 * (1 + 1e-9)
        if s > 1:
            state.set_subject(sid, _clamp_into(_scale_centered(box, s, s), frame))
    elif kind == ViolationKind.ASPECT_RATIO:
        sid = v.ids[0]
        box = state.get(sid)
        if box.w > box.h:
            new = _scale_centered(box, rules.aspect_max * box.h / box.w, 1.0)
        else:
            new = _scale_centered(box, 1.0, rules.aspect_max * box.w / box.h)
        state.set_subject(sid, _clamp_into(new, frame))
    elif kind == ViolationKind.HEAD_BODY_RATIO:
        _fix_head_body(state, v, rules)
    elif kind in (ViolationKind.COMPONENT_OUTSIDE_PARENT, ViolationKind.COMPONENT_LAYOUT):
        _fix_component(state, v, rules)
    elif kind == ViolationKind.OVERLAP:
        _fix_overlap(state, v, frame, rules)


def _scale_centered(box: BoundingBox, sx: float, sy: float) -> BoundingBox:
    cx, cy = box.center
    w, h = box.w * sx, box.h * sy
    return BoundingBox(x=cx - w / 2, y=cy - h / 2, w=w, h=h)


def _clamp_into(box: BoundingBox, frame: FrameSize) -> BoundingBox:
    w, h = box.w, box.h
    if w > frame.width or h > frame.height:
        s = min(frame.width / w, frame.height / h) * (1 - 1e-9)
        cx, cy = box.center
        w, h = w * s, h * s
        box = BoundingBox(x=cx - w / 2, y=cy - h / 2, w=w, h=h)
    x = min(max(box.x, 0.0), frame.width - box.w)
    y = min(max(box.y, 0.0), frame.height - box.h)
    return BoundingBox(x=x, y=y, w=box.w, h=box.h)


def _fix_head_body(state: _Boxes, v: Violation, rules: Rulebook) -> None:
    head_id, body_id = v.ids
    head, body = state.get(head_id), state.get(body_id)
    total = head.h + body.h
    new_head = BoundingBox(head.x, head.y, head.w, rules.head_frac * total)
    new_body = BoundingBox(body.x, new_head.bottom, body.w, (1 - rules.head_frac) * total)
    state.set_component(head_id, new_head)
    state.set_component(body_id, new_body)


def _fix_component(state: _Boxes, v: Violation, rules: Rulebook) -> None:
    sid = v.ids[0]
    comp = state.get(sid)
    parent = state.get(sid.parent)
    entry = state.layout.entry_for(sid)
    if entry is not None and _matches(entry.description, rules.accessory_words):
        # accessories sit on top of the parent, horizontally centered on it
        x = parent.center[0] - comp.w / 2
        y = parent.y - comp.h
        if y >= 0:
            state.set_component(sid, BoundingBox(x, y, comp.w, comp.h))
            return
    w = min(comp.w, parent.w)
    h = min(comp.h, parent.h)
    x = min(max(comp.x, parent.x), parent.right - w)
    y = min(max(comp.y, parent.y), parent.bottom - h)
    state.set_component(sid, BoundingBox(x, y, w, h))


def _fix_overlap(state: _Boxes, v: Violation, frame: FrameSize, rules: Rulebook) -> None:
    """Translate the pair apart along the axis needing the least displacement."""
    a_id, b_id = v.ids
    a, b = state.get(a_id), state.get(b_id)
    inter = intersection_area(a, b)
    target = rules.overlap_max * min(a.area, b.area)
    if inter <= target:
        return
    inter_w = min(a.right, b.right) - max(a.x, b.x)
    inter_h = min(a.bottom, b.bottom) - max(a.y, b.y)
    # displacement needed along each axis to bring the intersection to target
    dx = inter_w - target / inter_h + 0.5
    dy = inter_h - target / inter_w + 0.5
    if dx <= dy:
        _push_apart(state, frame, a_id, b_id, dx, axis="x")
    else:
        _push_apart(state, frame, a_id, b_id, dy, axis="y")


def _push_apart(state: _Boxes, frame: FrameSize, a_id, b_id, dist: float, axis: str) -> None:
    a, b = state.get(a_id), state.get(b_id)
    ca = a.center[0] if axis == "x" else a.center[1]
    cb = b.center[0] if axis == "x" else b.center[1]
    if ca > cb or (ca == cb and a_id.render() > b_id.render()):
        a_id, b_id = b_id, a_id
        a, b = b, a
    half = dist / 2
    limit = frame.width if axis == "x" else frame.height

    def moved(box: BoundingBox, delta: float) -> BoundingBox:
        if axis == "x":
            return BoundingBox(box.x + delta, box.y, box.w, box.h)
        return BoundingBox(box.x, box.y + delta, box.w, box.h)

    pos_a = a.x if axis == "x" else a.y
    pos_b = b.x if axis == "x" else b.y
    len_b = b.w if axis == "x" else b.h
    # a moves toward the origin, b away; frame edges absorb leftover motion
    give_a = min(half, pos_a)
    leftover_a = half - give_a
    give_b = min(half + leftover_a, limit - (pos_b + len_b))
    leftover_b = half + leftover_a - give_b
    give_a = min(give_a + leftover_b, pos_a)
    state.set_subject(a_id, moved(a, -give_a))
    state.set_subject(b_id, moved(b, give_b))
