"""Subject database: stable IDs, per-turn captions, locked feature embeddings.

The database survives the whole dialogue. A subject registered once keeps its
id forever; captions accumulate per turn; the feature embedding is locked the
first time the subject is drawn and only an explicit user-reference lock may
replace it. Subjects absent from a turn are retained, never implicitly
deleted.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field

from .errors import AlreadyLocked, IoFailure, OrphanComponent, SchemaVersionMismatch, UnknownId
from .model import ManagerSubjectEntry, SubjectId

SNAPSHOT_SCHEMA = "autostudio-db@1"
MAX_COMPONENTS = 7

PROVENANCES = ("toy-encoder", "bridge", "user-reference")


@dataclass(frozen=True)
class EmbeddingVector:
    """Fixed-length feature vector with its origin recorded."""

    values: tuple[float, ...]
    provenance: str

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if not self.values:
            raise ValueError("embedding must be non-empty")
        if any(v != v or v in (float("inf"), float("-inf")) for v in self.values):
            raise ValueError("embedding entries must be finite")

    @property
    def dim(self) -> int:
        return len(self.values)

    def to_json(self) -> dict:
        return {"values": list(self.values), "dim": self.dim, "provenance": self.provenance}

    @classmethod
    def from_json(cls, data: dict) -> "EmbeddingVector":
        vec = cls(values=tuple(float(v) for v in data["values"]), provenance=data["provenance"])
        if data.get("dim") not in (None, vec.dim):
            raise ValueError(f"declared dim {data['dim']} != {vec.dim}")
        return vec


@dataclass
class SubjectRecord:
    """One subject or component: id, name, caption history, optional embedding."""

    id: SubjectId
    name: str
    caption_by_turn: dict[int, str] = field(default_factory=dict)
    embedding: EmbeddingVector | None = None
    components: list["SubjectRecord"] = field(default_factory=list)

    def latest_caption(self) -> str:
        if not self.caption_by_turn:
            return self.name
        return self.caption_by_turn[max(self.caption_by_turn)]

    def to_json(self) -> dict:
        doc = {
            "id": self.id.render(),
            "name": self.name,
            "captions": {str(k): v for k, v in sorted(self.caption_by_turn.items())},
        }
        if self.embedding is not None:
            doc["embedding"] = self.embedding.to_json()
        if self.components:
            doc["components"] = [c.to_json() for c in self.components]
        return doc

    @classmethod
    def from_json(cls, data: dict) -> "SubjectRecord":
        rec = cls(
            id=SubjectId.parse(data["id"]),
            name=data["name"],
            caption_by_turn={int(k): v for k, v in data.get("captions", {}).items()},
            embedding=EmbeddingVector.from_json(data["embedding"]) if data.get("embedding") else None,
        )
        rec.components = [cls.from_json(c) for c in data.get("components", [])]
        return rec


class SubjectDatabase:
    """Registry of all subjects/components seen in a session."""

    def __init__(self):
        self._subjects: dict[str, SubjectRecord] = {}  # top-level only, insertion-ordered
        self._index: dict[str, SubjectRecord] = {}  # every record incl. components
        self.next_top_level_id = 1

    # -- lookup --

    def get(self, sid: SubjectId | str) -> SubjectRecord:
        key = sid.render() if isinstance(sid, SubjectId) else SubjectId.parse(sid).render()
        try:
            return self._index[key]
        except KeyError:
            raise UnknownId(f"no record {key!r}") from None

    def __contains__(self, sid: SubjectId | str) -> bool:
        key = sid.render() if isinstance(sid, SubjectId) else str(sid)
        return key in self._index

    def subjects(self) -> list[SubjectRecord]:
        return list(self._subjects.values())

    def __len__(self) -> int:
        return len(self._index)

    # -- registration --

    def register(self, entry: ManagerSubjectEntry | "SimpleEntry", turn: int) -> SubjectId:
        """Insert or update the record for one manager entry at the given turn.

        Re-registration of a known id appends the caption for this turn and
        leaves everything else untouched. Components must arrive after their
        parent (OrphanComponent otherwise).
        """
        sid = entry.id
        caption = entry.caption
        rec = self._register_one(sid, caption, turn)
        for comp in getattr(entry, "components", []) or []:
            self._register_one(comp.id, comp.caption, turn)
        return rec.id

    def _register_one(self, sid: SubjectId, caption: str, turn: int) -> SubjectRecord:
        key = sid.render()
        if key in self._index:
            rec = self._index[key]
            rec.caption_by_turn[turn] = caption
            return rec
        name = caption.split(",")[0].strip() or key
        rec = SubjectRecord(id=sid, name=name, caption_by_turn={turn: caption})
        if sid.is_component:
            parent_key = sid.parent.render()
            if parent_key not in self._index:
                raise OrphanComponent(f"component {key} registered before parent {parent_key}")
            parent = self._index[parent_key]
            if len(parent.components) >= MAX_COMPONENTS:
                raise OrphanComponent(
                    f"parent {parent_key} already has {MAX_COMPONENTS} components"
                )
            parent.components.append(rec)
        else:
            self._subjects[key] = rec
            self.next_top_level_id = max(self.next_top_level_id, sid.path[0] + 1)
        self._index[key] = rec
        return rec

    def lock_embedding(self, sid: SubjectId | str, vec: EmbeddingVector) -> None:
        """Set the record's embedding.

        A locked embedding is immutable; only a user-reference vector may
        replace an existing one (explicit customization). All embeddings of
        one provenance must share a dimension within the session.
        """
        rec = self.get(sid)
        if rec.embedding is not None and vec.provenance != "user-reference":
            raise AlreadyLocked(f"embedding for {rec.id} already locked")
        for other in self._index.values():
            if (
                other.embedding is not None
                and other.embedding.provenance == vec.provenance
                and other.embedding.dim != vec.dim
            ):
                raise ValueError(
                    f"{vec.provenance} embeddings must share a dimension: "
                    f"{other.id} has {other.embedding.dim}, got {vec.dim}"
                )
        rec.embedding = vec

    # -- persistence --

    def to_json(self) -> dict:
        return {
            "schema": SNAPSHOT_SCHEMA,
            "next_top_level_id": self.next_top_level_id,
            "subjects": [rec.to_json() for rec in self._subjects.values()],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "SubjectDatabase":
        if doc.get("schema") != SNAPSHOT_SCHEMA:
            raise SchemaVersionMismatch(f"expected {SNAPSHOT_SCHEMA}, got {doc.get('schema')!r}")
        db = cls()
        for sub in doc.get("subjects", []):
            rec = SubjectRecord.from_json(sub)
            db._subjects[rec.id.render()] = rec
            db._index[rec.id.render()] = rec
            for comp in rec.components:
                db._index[comp.id.render()] = comp
        db.next_top_level_id = int(doc.get("next_top_level_id", 1))
        return db

    def snapshot(self, directory: str | os.PathLike) -> str:
        """Write db.json atomically into the session directory; returns the path."""
        path = os.path.join(os.fspath(directory), "db.json")
        try:
            os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(self.to_json(), fh, indent=2, sort_keys=False)
                fh.write("\n")
            os.replace(tmp, path)
        except OSError as exc:
            raise IoFailure(f"snapshot failed: {exc}") from exc
        return path

    @classmethod
    def load(cls, directory: str | os.PathLike) -> "SubjectDatabase":
        path = os.path.join(os.fspath(directory), "db.json")
        try:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise IoFailure(f"cannot load {path}: {exc}") from exc
        return cls.from_json(doc)

    # -- equality (structural, for round-trip checks) --

    def __eq__(self, other) -> bool:
        if not isinstance(other, SubjectDatabase):
            return NotImplemented
        return self.to_json() == other.to_json()


@dataclass
class SimpleEntry:
    """Minimal registerable entry for callers that do not have manager output."""

    caption: str
    id: SubjectId
    components: list["SimpleEntry"] = field(default_factory=list)
