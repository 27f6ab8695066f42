"""Deterministic fallback synthesizer for the scripted mock backend.

When a transcript has no recorded response, the mock answers with rulebook-
aware synthetic output that is a pure function of (template, input text):
the manager extracts lexicon nouns and assigns stable ids, the layout
placer produces compliant boxes, and the supervisor reports validator
findings with a mechanically refined layout attached.
"""

from __future__ import annotations

import ast
import re

from ..errors import LayoutFormatError, Unsatisfiable
from ..layout.lineformat import parse_layout, serialize_layout
from ..layout.refine import refine_rule_based
from ..layout.rules import DEFAULT_RULEBOOK, ViolationKind, validate
from ..model import (
    BoundingBox,
    FrameSize,
    LayoutEntry,
    ManagerComponentEntry,
    ManagerOutput,
    ManagerSubjectEntry,
    RawLayout,
    SubjectId,
)
from ..drawer.schedule import derive_seed
from .outputs import parse_manager_output, serialize_manager_output

PERSON_NOUNS = {
    "person", "man", "woman", "boy", "girl", "child", "princess", "prince", "knight",
    "wizard", "witch", "king", "queen", "farmer", "pirate", "astronaut", "adult", "kid",
}
ANIMAL_NOUNS = {
    "dog", "cat", "bird", "horse", "rabbit", "dragon", "fox", "bear", "elephant",
    "mouse", "turkey", "fish", "owl", "lion", "wolf", "duck", "puppy", "kitten",
}
STRUCTURE_NOUNS = {"house", "castle", "tower", "barn", "shop", "cottage", "windmill"}
OBJECT_NOUNS = {
    "car", "tree", "table", "chair", "boat", "rocket", "lamp", "box", "robot",
    "bench", "fountain", "snowman", "balloon", "kite", "cake",
}
SCENE_NOUNS = (
    "park", "forest", "street", "beach", "garden", "meadow", "mountain", "city",
    "field", "lake", "kitchen", "room", "village", "desert", "harbor", "night",
)
ACCESSORY_NOUNS = {"hat", "crown", "cap", "helmet", "tiara", "scarf"}
COLOR_WORDS = (
    "red", "blue", "green", "yellow", "golden", "purple", "orange", "pink",
    "white", "black", "brown", "silver", "grey",
)

ATTRS = ("a cheerful", "a quiet", "a sturdy", "a graceful", "a curious", "a gentle")
ACTIONS = (
    "standing calmly", "looking around", "posed at ease", "facing the viewer",
    "caught mid-motion", "resting quietly",
)
DETAIL_TAILS = (
    "in warm light", "under soft shadows", "with crisp edges", "in gentle focus",
    "against the breeze", "catching the light",
)

# reference sizes on a 1024x1024 frame, per subject class
REFERENCE_SIZES = {
    "person": (350, 600),
    "animal": (320, 300),
    "structure": (400, 300),
    "object": (300, 300),
}

COMPONENT_TEMPLATES = {
    "person": (
        ("head", "{name}'s head"),
        ("body", "{name}'s body"),
        ("shoes", "{name}'s shoes"),
    ),
    "animal": (
        ("head", "the {name}'s head"),
        ("furry torso", "the {name}'s torso"),
        ("tail", "the {name}'s tail"),
    ),
    "structure": (
        ("roof", "the {name}'s roof"),
        ("windows", "the {name}'s windows"),
        ("gate", "the {name}'s gate"),
    ),
    "object": (
        ("top part", "the {name}'s upper part"),
        ("main body", "the {name}'s main body"),
        ("base", "the {name}'s base"),
    ),
}

_SLOT_RES = {
    "context": re.compile(r"<context>(.*?)</context>", re.DOTALL),
    "content": re.compile(r"<content>(.*?)</content>", re.DOTALL),
    "size": re.compile(r"<size>(.*?)</size>", re.DOTALL),
}
_SIZE_RE = re.compile(r"\[\s*(\d+)\s*,\s*(\d+)\s*\]")
_ADVICE_RE = re.compile(r"<advice>(.*?)</advice>", re.DOTALL)
_WORD_RE = re.compile(r"[a-z']+")


def synthesize(template: str, user_text: str, seed: int = 0) -> str:
    if template == "manager":
        return _synth_manager(user_text)
    if template == "layout":
        return _synth_layout(user_text)
    if template == "supervisor":
        return _synth_supervisor(user_text)
    raise ValueError(f"unknown template {template!r}")


def _slot(user_text: str, name: str) -> str:
    match = _SLOT_RES[name].search(user_text)
    return match.group(1) if match else ""


def _frame_from(user_text: str) -> FrameSize:
    match = _SIZE_RE.search(_slot(user_text, "size"))
    if not match:
        return FrameSize(1024, 1024)
    return FrameSize(int(match.group(1)), int(match.group(2)))


def _pick(options: tuple[str, ...], *key) -> str:
    return options[derive_seed(*key) % len(options)]


def _classify(name: str) -> str:
    if name in PERSON_NOUNS:
        return "person"
    if name in ANIMAL_NOUNS:
        return "animal"
    if name in STRUCTURE_NOUNS:
        return "structure"
    return "object"


def _singular(token: str) -> str:
    all_nouns = PERSON_NOUNS | ANIMAL_NOUNS | STRUCTURE_NOUNS | OBJECT_NOUNS | ACCESSORY_NOUNS
    if token in all_nouns:
        return token
    if token.endswith("s") and token[:-1] in all_nouns:
        return token[:-1]
    return token


# --- manager ---


def _known_entities(context: str) -> tuple[dict[str, str], dict[str, dict[str, str]], int]:
    """Recover name->id and per-subject component name->id maps from context."""
    name_to_id: dict[str, str] = {}
    comps: dict[str, dict[str, str]] = {}
    max_top = 0
    for line in context.splitlines():
        line = line.strip()
        if not line.startswith("["):
            continue
        try:
            value = ast.literal_eval(line)
        except (ValueError, SyntaxError):
            continue
        if not (isinstance(value, (list, tuple)) and len(value) >= 2 and isinstance(value[0], str)):
            continue
        caption, raw_id = value[0], value[-1]
        if not isinstance(raw_id, str):
            continue
        name = caption.split(",")[0].strip().lower()
        if "-" in raw_id:
            top = raw_id.split("-")[0]
            comps.setdefault(top, {})[name] = raw_id
        else:
            name_to_id.setdefault(name, raw_id)
            if raw_id.isdigit():
                max_top = max(max_top, int(raw_id))
    return name_to_id, comps, max_top


def _synth_manager(user_text: str) -> str:
    context = _slot(user_text, "context")
    content = _slot(user_text, "content").strip()
    known, known_comps, max_top = _known_entities(context)

    tokens = [_singular(t) for t in _WORD_RE.findall(content.lower())]
    subject_nouns = PERSON_NOUNS | ANIMAL_NOUNS | STRUCTURE_NOUNS | OBJECT_NOUNS
    names: list[str] = []
    accessories: list[str] = []
    for tok in tokens:
        if tok in subject_nouns and tok not in names:
            names.append(tok)
        elif tok in ACCESSORY_NOUNS and tok not in accessories:
            accessories.append(tok)
    if not names and accessories:
        names.append(accessories.pop(0))

    color = next((t for t in tokens if t in COLOR_WORDS), None)
    scene = next((t for t in tokens if t in SCENE_NOUNS), None)

    next_top = max_top + 1
    subjects: list[ManagerSubjectEntry] = []
    for name in names:
        if name in known:
            sid = SubjectId.parse(known[name])
        else:
            sid = SubjectId((next_top,))
            next_top += 1
        attr = f"a {color}" if color and len(names) == 1 else _pick(ATTRS, name, content)
        action = _pick(ACTIONS, name, content)
        subject = ManagerSubjectEntry(caption=f"{name}, {attr} {name}, {action}", id=sid)
        comp_ids = dict(known_comps.get(sid.render(), {}))
        used = {int(v.split("-")[1]) for v in comp_ids.values()}
        next_sub = max(used, default=0) + 1
        for comp_name, comp_attr in COMPONENT_TEMPLATES[_classify(name)]:
            if comp_name in comp_ids:
                cid = SubjectId.parse(comp_ids[comp_name])
            else:
                cid = SubjectId((sid.path[0], next_sub))
                next_sub += 1
            detail = _pick(DETAIL_TAILS, name, comp_name, content)
            subject.components.append(
                ManagerComponentEntry(
                    caption=f"{comp_name}, {comp_attr.format(name=name)}, {detail}",
                    id=cid,
                )
            )
        subjects.append(subject)

    for accessory in accessories:
        if not subjects:
            break
        holder = subjects[0]
        comp_ids = dict(known_comps.get(holder.id.render(), {}))
        if accessory in comp_ids:
            cid = SubjectId.parse(comp_ids[accessory])
        else:
            taken = {c.id.path[1] for c in holder.components}
            taken |= {int(v.split("-")[1]) for v in comp_ids.values()}
            cid = SubjectId((holder.id.path[0], max(taken, default=0) + 1))
        if all(c.id != cid for c in holder.components):
            detail = _pick(DETAIL_TAILS, accessory, content)
            holder.components.append(
                ManagerComponentEntry(
                    caption=f"{accessory}, {holder.name}'s {accessory}, {detail}", id=cid
                )
            )

    background = f"a {scene} scene stretching behind" if scene else "a plain softly lit backdrop"
    output = ManagerOutput(
        global_caption=content.rstrip(".!? ") or "a quiet scene",
        background_caption=background,
        subjects=subjects,
    )
    return serialize_manager_output(output)


# --- layout ---


def _synth_layout(user_text: str) -> str:
    frame = _frame_from(user_text)
    context = _slot(user_text, "context")
    content = _slot(user_text, "content")

    advice_match = _ADVICE_RE.search(context)
    if advice_match:
        revised = [
            ln for ln in advice_match.group(1).splitlines() if ln.strip().startswith("[")
        ]
        if revised:
            return "<output>\n" + "\n".join(ln.strip() for ln in revised) + "\n</output>"
        prior_lines = [
            ln
            for ln in context.splitlines()
            if ln.strip().startswith("[") and ln.strip().count(",") >= 4
        ]
        if prior_lines:
            try:
                prior = parse_layout("\n".join(ln.strip() for ln in prior_lines), frame=frame)
                repaired = refine_rule_based(prior, validate(prior))
                return "<output>\n" + serialize_layout(repaired).rstrip("\n") + "\n</output>"
            except (LayoutFormatError, Unsatisfiable):
                pass

    try:
        manager = parse_manager_output(content)
    except Exception:
        manager = ManagerOutput(global_caption="", background_caption="", subjects=[])
    layout = _place(manager, frame)
    return "<output>\n" + serialize_layout(layout).rstrip("\n") + "\n</output>"


def _place(manager: ManagerOutput, frame: FrameSize) -> RawLayout:
    n = len(manager.subjects)
    entries: list[LayoutEntry] = []
    if n == 0:
        return RawLayout(frame=frame, entries=entries, manager=manager)
    scale = (frame.area / (1024.0 * 1024.0)) ** 0.5
    min_area = frame.area / 25.0
    max_area = frame.area / 2.0

    sizes = []
    for sub in manager.subjects:
        ref_w, ref_h = REFERENCE_SIZES[_classify(sub.name.lower())]
        w, h = ref_w * scale, ref_h * scale
        area = w * h
        if area > max_area:
            k = (max_area / area) ** 0.5 * 0.999
            w, h = w * k, h * k
        if area < min_area:
            k = (min_area / area) ** 0.5 * 1.001
            w, h = w * k, h * k
        sizes.append((w, h))

    total_w = sum(w for w, _ in sizes)
    if total_w > frame.width * 0.92:
        k = frame.width * 0.92 / total_w
        sizes = [(w * k, h * k) for w, h in sizes]

    for i, (sub, (w, h)) in enumerate(zip(manager.subjects, sizes)):
        cx = frame.width * (i + 1) / (n + 1)
        cy = frame.height * 0.55
        x = min(max(cx - w / 2, 0.0), frame.width - w)
        y = min(max(cy - h / 2, 0.0), frame.height - h)
        box = BoundingBox(round(x), round(y), round(w), round(h))
        entries.append(LayoutEntry(description=sub.name, box=box, id=sub.id))
        entries.extend(_place_components(sub, box, frame))
    layout = RawLayout(frame=frame, entries=entries, manager=manager)
    try:
        layout = refine_rule_based(layout, validate(layout))
    except Unsatisfiable:
        pass
    return layout


def _place_components(sub: ManagerSubjectEntry, box: BoundingBox, frame: FrameSize):
    cls = _classify(sub.name.lower())
    placed = []
    generic_row = 0
    for comp in sub.components:
        naming = comp.caption.split(",")[0].strip().lower()
        b = _component_box(naming, cls, box, generic_row, frame)
        if b is None:
            generic_row += 1
            b = _generic_box(box, generic_row)
        placed.append(LayoutEntry(description=comp.caption, box=b, id=comp.id))
    return placed


def _component_box(naming: str, cls: str, p: BoundingBox, row: int, frame: FrameSize):
    words = set(_WORD_RE.findall(naming))
    if words & ACCESSORY_NOUNS:
        h = max(p.h * 0.12, 8)
        w = max(p.w * 0.4, 8)
        y = p.y - h
        if y < 0:  # no room above: tuck inside the top instead
            y = p.y
        return BoundingBox(round(p.x + (p.w - w) / 2), round(y), round(w), round(h))
    if "head" in words:
        if cls == "animal":
            return _rounded(p.x, p.y + p.h * 0.05, p.w * 0.35, p.h * 0.9)
        return _rounded(p.x + p.w * 0.25, p.y, p.w * 0.5, p.h * 0.3)
    if words & {"body", "torso"}:
        if cls == "animal":
            return _rounded(p.x + p.w * 0.35, p.y + p.h * 0.05, p.w * 0.5, p.h * 0.9)
        return _rounded(p.x + p.w * 0.05, p.y + p.h * 0.3, p.w * 0.9, p.h * 0.7)
    if "tail" in words:
        return _rounded(p.x + p.w * 0.85, p.y + p.h * 0.3, p.w * 0.15, p.h * 0.35)
    if "shoes" in words:
        return _rounded(p.x + p.w * 0.2, p.y + p.h * 0.88, p.w * 0.6, p.h * 0.12)
    if "roof" in words:
        return _rounded(p.x + p.w * 0.05, p.y + p.h * 0.05, p.w * 0.9, p.h * 0.4)
    if words & {"window", "windows"}:
        return _rounded(p.x + p.w * 0.05, p.y + p.h * 0.5, p.w * 0.35, p.h * 0.45)
    if words & {"gate", "door"}:
        return _rounded(p.x + p.w * 0.45, p.y + p.h * 0.5, p.w * 0.5, p.h * 0.45)
    if "top" in words:
        return _rounded(p.x + p.w * 0.1, p.y, p.w * 0.8, p.h * 0.35)
    if "main" in words:
        return _rounded(p.x + p.w * 0.05, p.y + p.h * 0.35, p.w * 0.9, p.h * 0.5)
    if "base" in words:
        return _rounded(p.x + p.w * 0.15, p.y + p.h * 0.85, p.w * 0.7, p.h * 0.15)
    return None


def _generic_box(p: BoundingBox, row: int) -> BoundingBox:
    h = p.h * 0.25
    y = p.y + min(p.h * 0.1 * row, p.h - h)
    return _rounded(p.x + p.w * 0.3, y, p.w * 0.4, h)


def _rounded(x, y, w, h) -> BoundingBox:
    return BoundingBox(round(x), round(y), max(round(w), 1), max(round(h), 1))


# --- supervisor ---

_SUGGESTION_TEXT = {
    ViolationKind.OVERLAP: "Increase the spacing between subjects {ids}; their overlap is {pct}.",
    ViolationKind.TOO_LARGE: "Shrink subject {ids}; it covers more than half of the frame.",
    ViolationKind.TOO_SMALL: "Enlarge subject {ids}; it is smaller than 1/25 of the frame.",
    ViolationKind.SIZE_SPREAD: "Enlarge subject {ids}; it is under 1/6 of the largest subject.",
    ViolationKind.ASPECT_RATIO: "Rebalance subject {ids}; one side exceeds twice the other.",
    ViolationKind.OUT_OF_FRAME: "Move subject {ids} fully inside the frame.",
    ViolationKind.COMPONENT_OUTSIDE_PARENT: "Keep component {ids} inside its subject.",
    ViolationKind.COMPONENT_LAYOUT: "Attach accessory {ids} to the top of its subject.",
    ViolationKind.HEAD_BODY_RATIO: "Adjust {ids} so the head-to-body ratio is three to seven.",
    ViolationKind.FORMAT: "Fix the line format: {ids}.",
}


def _composition_note(layout: RawLayout) -> str | None:
    """Advisory only: composition quality has no measurable hard rule, so an
    off-center mass is mentioned but never counted as a violation."""
    subjects = layout.subject_entries()
    if not subjects:
        return None
    cx = sum(e.box.center[0] * e.box.area for e in subjects) / sum(e.box.area for e in subjects)
    cy = sum(e.box.center[1] * e.box.area for e in subjects) / sum(e.box.area for e in subjects)
    dx = abs(cx - layout.frame.width / 2) / layout.frame.width
    dy = abs(cy - layout.frame.height * 0.55) / layout.frame.height
    if max(dx, dy) > 0.2:
        return ("Composition note: the combined mass sits away from the frame "
                "center; consider a more central arrangement.")
    return None


def _synth_supervisor(user_text: str) -> str:
    frame = _frame_from(user_text)
    content = _slot(user_text, "content")
    lines = [ln for ln in content.splitlines() if ln.strip().startswith("[")]
    try:
        layout = parse_layout("\n".join(ln.strip() for ln in lines), frame=frame)
    except LayoutFormatError as exc:
        fixes = "; ".join(v.message for v in exc.violations[:3])
        return f"<output>\n<advice>\nFix the line format: {fixes}.\n</advice>\n</output>"
    found = validate(layout)
    if not found:
        note = _composition_note(layout)
        body = "compliant" + (f"\n{note}" if note else "")
        return f"<output>\n<advice>\n{body}\n</advice>\n</output>"
    suggestions = []
    for v in found:
        ids = " and ".join(i.render() for i in v.ids)
        pct = f"{v.measure:.0%}" if v.kind == ViolationKind.OVERLAP else ""
        suggestions.append(_SUGGESTION_TEXT[v.kind].format(ids=ids, pct=pct))
    body = "\n".join(dict.fromkeys(suggestions))
    try:
        repaired = refine_rule_based(layout, found)
        if not validate(repaired):
            body += "\n" + serialize_layout(repaired).rstrip("\n")
    except Unsatisfiable:
        pass
    return f"<output>\n<advice>\n{body}\n</advice>\n</output>"


def manager_context_block(turn: int, prompt: str, output: ManagerOutput) -> str:
    """Canonical per-turn context block fed back to the agents."""
    return f"[turn {turn}]\nprompt: {prompt}\n{serialize_manager_output(output)}"


def layout_context_block(layouts: list[RawLayout]) -> str:
    parts = []
    for lay in layouts:
        parts.append(serialize_layout(lay).rstrip("\n"))
    return "\n".join(parts)


def advice_context_block(advice_text: str) -> str:
    return f"<advice>\n{advice_text}\n</advice>"
