from __future__ import annotations

import json

import pytest

from autostudio.errors import AlreadyLocked, IoFailure, OrphanComponent, SchemaVersionMismatch, UnknownId
from autostudio.model import SubjectId
from autostudio.registry import EmbeddingVector, SimpleEntry, SubjectDatabase


def _entry(caption, sid, components=()):
    return SimpleEntry(
        caption=caption,
        id=SubjectId.parse(sid),
        components=[SimpleEntry(caption=c, id=SubjectId.parse(i)) for c, i in components],
    )


def test_register_new_subject():
    db = SubjectDatabase()
    sid = db.register(_entry("house", "1"), turn=1)
    assert sid.render() == "1"
    rec = db.get("1")
    assert rec.name == "house"
    assert rec.caption_by_turn == {1: "house"}
    assert rec.embedding is None


def test_reregister_appends_caption_same_record():
    db = SubjectDatabase()
    db.register(_entry("house", "1"), turn=1)
    db.register(_entry("house, covered in snow", "1"), turn=2)
    rec = db.get("1")
    assert rec.caption_by_turn == {1: "house", 2: "house, covered in snow"}
    assert len(db.subjects()) == 1


def test_component_before_parent_is_orphan():
    db = SubjectDatabase()
    with pytest.raises(OrphanComponent):
        db.register(_entry("roof, red roof, with tiles", "1-2"), turn=1)


def test_components_attach_to_parent():
    db = SubjectDatabase()
    db.register(
        _entry("dog", "1", components=[("head, dog head, round", "1-1"),
                                       ("tail, dog tail, wagging", "1-2")]),
        turn=1,
    )
    assert "1-1" in db and "1-2" in db
    assert [c.id.render() for c in db.get("1").components] == ["1-1", "1-2"]


def test_component_limit_enforced():
    db = SubjectDatabase()
    db.register(_entry("robot", "1"), turn=1)
    for j in range(1, 8):
        db.register(_entry(f"part {j}, robot part, metallic", f"1-{j}"), turn=1)
    with pytest.raises(OrphanComponent):
        db.register(_entry("part 8, robot part, metallic", "1-8"), turn=1)


def test_lock_embedding_store_and_retrieve_bit_identical():
    db = SubjectDatabase()
    db.register(_entry("dog", "1"), turn=1)
    vec = EmbeddingVector(values=tuple(float(i) / 7 for i in range(64)), provenance="toy-encoder")
    db.lock_embedding("1", vec)
    assert db.get("1").embedding == vec
    assert db.get("1").embedding.values == vec.values


def test_lock_twice_rejected():
    db = SubjectDatabase()
    db.register(_entry("dog", "1"), turn=1)
    db.lock_embedding("1", EmbeddingVector((1.0, 2.0), "toy-encoder"))
    with pytest.raises(AlreadyLocked):
        db.lock_embedding("1", EmbeddingVector((3.0, 4.0), "toy-encoder"))


def test_user_reference_replaces_toy_lock():
    db = SubjectDatabase()
    db.register(_entry("dog", "1"), turn=1)
    db.lock_embedding("1", EmbeddingVector((1.0, 2.0), "toy-encoder"))
    custom = EmbeddingVector((9.0, 9.0), "user-reference")
    db.lock_embedding("1", custom)
    assert db.get("1").embedding == custom


def test_lock_unknown_id():
    db = SubjectDatabase()
    with pytest.raises(UnknownId):
        db.lock_embedding("4", EmbeddingVector((1.0,), "toy-encoder"))


def test_empty_db_round_trip(tmp_path):
    db = SubjectDatabase()
    db.snapshot(tmp_path)
    assert SubjectDatabase.load(tmp_path) == db


def test_populated_round_trip(tmp_path):
    db = SubjectDatabase()
    db.register(_entry("dog", "1", components=[("head, dog head, round", "1-1")]), turn=1)
    db.register(_entry("cat", "2"), turn=1)
    db.register(_entry("tree", "3"), turn=2)
    db.lock_embedding("1", EmbeddingVector((0.25, -1.5, 3.125), "toy-encoder"))
    db.lock_embedding("2", EmbeddingVector((1e-9, 2.0), "bridge"))
    db.snapshot(tmp_path)
    loaded = SubjectDatabase.load(tmp_path)
    assert loaded == db
    assert loaded.get("1").embedding.values == (0.25, -1.5, 3.125)
    assert loaded.next_top_level_id == db.next_top_level_id


def test_truncated_snapshot_is_io_failure(tmp_path):
    db = SubjectDatabase()
    db.register(_entry("dog", "1"), turn=1)
    path = db.snapshot(tmp_path)
    raw = open(path, encoding="utf-8").read()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(raw[: len(raw) // 2])
    with pytest.raises(IoFailure):
        SubjectDatabase.load(tmp_path)


def test_schema_version_checked(tmp_path):
    (tmp_path / "db.json").write_text(json.dumps({"schema": "autostudio-db@99", "subjects": []}))
    with pytest.raises(SchemaVersionMismatch):
        SubjectDatabase.load(tmp_path)


def test_next_top_level_id_tracks_registrations():
    db = SubjectDatabase()
    db.register(_entry("dog", "1"), turn=1)
    db.register(_entry("cat", "2"), turn=1)
    assert db.next_top_level_id == 3
