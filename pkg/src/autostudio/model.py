"""Core value types shared by the registry, agents, layout and drawer."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import MalformedId


@dataclass(frozen=True, order=True)
class SubjectId:
    """Stable hierarchical identifier: depth 1 = subject, depth 2 = component.

    Rendered as dash-joined decimals ("3", "3-2"). Rendering and parsing
    round-trip exactly; anything else is rejected at parse time.
    """

    path: tuple[int, ...]

    def __post_init__(self):
        if not 1 <= len(self.path) <= 2:
            raise MalformedId(f"id depth must be 1 or 2, got {len(self.path)}")
        if any(p <= 0 for p in self.path):
            raise MalformedId(f"id elements must be positive: {self.path}")

    @classmethod
    def parse(cls, text: str) -> "SubjectId":
        parts = str(text).strip().split("-")
        if not all(p.isdigit() for p in parts) or "" in parts:
            raise MalformedId(f"not a dash-joined integer id: {text!r}")
        return cls(tuple(int(p) for p in parts))

    def render(self) -> str:
        return "-".join(str(p) for p in self.path)

    @property
    def is_component(self) -> bool:
        return len(self.path) == 2

    @property
    def parent(self) -> "SubjectId | None":
        return SubjectId(self.path[:1]) if self.is_component else None

    @property
    def top(self) -> "SubjectId":
        return SubjectId(self.path[:1])

    def __str__(self) -> str:
        return self.render()


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box: top-left corner plus width and height, in pixels."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box sides must be positive: {self}")

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def right(self) -> float:
        return self.x + self.w

    @property
    def bottom(self) -> float:
        return self.y + self.h

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2, self.y + self.h / 2)

    def contains(self, other: "BoundingBox") -> bool:
        return (
            self.x <= other.x
            and self.y <= other.y
            and other.right <= self.right
            and other.bottom <= self.bottom
        )

    def as_list(self) -> list[float]:
        return [_num(self.x), _num(self.y), _num(self.w), _num(self.h)]


@dataclass(frozen=True)
class FrameSize:
    """Target image size in pixels. Aspect is unrestricted."""

    width: int
    height: int

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"frame sides must be positive: {self}")

    @property
    def area(self) -> float:
        return float(self.width) * float(self.height)

    def contains(self, box: BoundingBox) -> bool:
        return box.x >= 0 and box.y >= 0 and box.right <= self.width and box.bottom <= self.height


def _num(v: float) -> float | int:
    """Collapse integral floats to int so serialized boxes read like the originals."""
    return int(v) if float(v).is_integer() else float(v)


# --- structured agent outputs ---


@dataclass
class ManagerComponentEntry:
    """One fine-grained component: triple-form caption plus its id."""

    caption: str
    id: SubjectId


@dataclass
class ManagerSubjectEntry:
    """One subject with its caption, id and component list."""

    caption: str
    id: SubjectId
    components: list[ManagerComponentEntry] = field(default_factory=list)

    @property
    def name(self) -> str:
        return self.caption.split(",")[0].strip()


@dataclass
class ManagerOutput:
    """Parsed output of the manager agent for one turn."""

    global_caption: str
    background_caption: str
    subjects: list[ManagerSubjectEntry] = field(default_factory=list)

    def all_ids(self) -> list[SubjectId]:
        out: list[SubjectId] = []
        for s in self.subjects:
            out.append(s.id)
            out.extend(c.id for c in s.components)
        return out

    def caption_for(self, sid: SubjectId) -> str | None:
        for s in self.subjects:
            if s.id == sid:
                return s.caption
            for c in s.components:
                if c.id == sid:
                    return c.caption
        return None


@dataclass
class LayoutEntry:
    """One layout line: description, box, id."""

    description: str
    box: BoundingBox
    id: SubjectId


@dataclass
class RawLayout:
    """A full layout: frame, one entry per subject/component, source captions."""

    frame: FrameSize
    entries: list[LayoutEntry] = field(default_factory=list)
    manager: ManagerOutput | None = None

    def entry_for(self, sid: SubjectId) -> LayoutEntry | None:
        for e in self.entries:
            if e.id == sid:
                return e
        return None

    def subject_entries(self) -> list[LayoutEntry]:
        return [e for e in self.entries if not e.id.is_component]

    def component_entries(self, parent: SubjectId) -> list[LayoutEntry]:
        return [e for e in self.entries if e.id.is_component and e.id.parent == parent]


@dataclass
class SupervisorAdvice:
    """Supervisor feedback: imperative suggestions, optionally a revised layout."""

    suggestions: list[str] = field(default_factory=list)
    revised_layout: RawLayout | None = None
    compliant: bool = False

    def as_text(self) -> str:
        if self.compliant and not self.suggestions:
            return "compliant"
        return " ".join(self.suggestions)
