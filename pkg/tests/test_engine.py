from __future__ import annotations

import hashlib
import json
from pathlib import Path

import pytest

from autostudio.drawer.toy import ToyParams
from autostudio.engine.config import EngineConfig, load_config, parse_frame
from autostudio.engine.pipeline import Engine, replay
from autostudio.engine.session import load_session_index, load_turn_layout, parse_script
from autostudio.errors import (
    AgentFailure,
    DrawFailure,
    ScriptParseError,
    SchemaViolation,
    SessionFull,
)
from autostudio.layout.rules import validate
from autostudio.model import FrameSize, SubjectId


def fast_config(**kw) -> EngineConfig:
    base = dict(
        frame=FrameSize(128, 128),
        steps=10,
        seed=7,
        toy=ToyParams(subject_canvas=64),
    )
    base.update(kw)
    return EngineConfig(**base)


def write_script(path: Path, turns, **extra) -> Path:
    doc = {"turns": turns}
    doc.update(extra)
    path.write_text(json.dumps(doc))
    return path


def tree_hashes(root: Path) -> dict[str, str]:
    out = {}
    for p in sorted(root.rglob("*")):
        if p.is_file():
            out[str(p.relative_to(root))] = hashlib.sha256(p.read_bytes()).hexdigest()
    return out


# --- config ---

def test_config_defaults_match_contract():
    cfg = EngineConfig()
    assert (cfg.r, cfg.alpha, cfg.beta, cfg.steps) == (0.95, 0.2, 0.7, 30)
    assert cfg.frame == FrameSize(1024, 1024)
    assert cfg.max_turns == 20


def test_config_json_round_trip():
    cfg = fast_config(no_supervisor=True, alpha_one=True)
    back = EngineConfig.from_json(cfg.to_json())
    assert back == cfg


def test_config_rejects_unknown_keys_and_bad_values():
    with pytest.raises(ValueError):
        EngineConfig.from_json({"mystery": 1})
    with pytest.raises(ValueError):
        EngineConfig(r=1.5)
    with pytest.raises(ValueError):
        EngineConfig(refine_rounds=5)


def test_parse_frame():
    assert parse_frame("640x480") == FrameSize(640, 480)
    with pytest.raises(ValueError):
        parse_frame("640by480")


def test_load_config_toml_and_env(tmp_path, monkeypatch):
    path = tmp_path / "engine.toml"
    path.write_text('r = 0.9\nframe = "256x256"\nseed = 3\n[toy]\nsubject_canvas = 64\n')
    monkeypatch.setenv("AUTOSTUDIO_CHAT_ENDPOINT", "http://example/chat")
    cfg = load_config(str(path))
    assert cfg.r == 0.9
    assert cfg.frame == FrameSize(256, 256)
    assert cfg.toy.subject_canvas == 64
    assert cfg.chat_endpoint == "http://example/chat"


# --- single turn ---

def test_one_turn_session(tmp_path):
    engine = Engine(fast_config(), tmp_path)
    session = engine.create_session("s1")
    record = engine.run_turn(session, "a dog in a park")
    assert record.k == 1
    assert len(record.manager.subjects) == 1
    assert validate(record.final_layout) == []
    assert (session.root / "turn_1" / "image.png").exists()
    assert (session.root / "db.json").exists()
    assert load_session_index(session.root)["turns"][0]["prompt"] == "a dog in a park"
    assert "1" in session.db
    assert session.db.get("1").embedding is not None


def test_no_supervisor_ablation_skips_advice(tmp_path):
    engine = Engine(fast_config(no_supervisor=True), tmp_path)
    session = engine.create_session("s1")
    record = engine.run_turn(session, "a dog in a park")
    assert record.advice is None
    with_sup = Engine(fast_config(), tmp_path / "b").create_session("s2")
    rec2 = Engine(fast_config(), tmp_path / "b").run_turn(with_sup, "a dog in a park")
    assert rec2.advice is not None


def test_session_full(tmp_path):
    engine = Engine(fast_config(max_turns=1), tmp_path)
    session = engine.create_session("s1")
    engine.run_turn(session, "a dog in a park")
    with pytest.raises(SessionFull):
        engine.run_turn(session, "the dog jumps")


def test_empty_prompt_rejected(tmp_path):
    engine = Engine(fast_config(), tmp_path)
    session = engine.create_session("s1")
    with pytest.raises(AgentFailure):
        engine.run_turn(session, "   ")
    assert session.turns == []


def test_subject_absent_from_turn_is_retained(tmp_path):
    engine = Engine(fast_config(), tmp_path)
    session = engine.create_session("s1")
    engine.run_turn(session, "a dog in a park")
    engine.run_turn(session, "a house by the lake")
    assert "1" in session.db  # the dog survives
    names = {r.name for r in session.db.subjects()}
    assert {"dog", "house"} <= names
    # second turn's layout only contains the house
    ids = {e.id.top.render() for e in session.turns[1].final_layout.entries}
    assert "1" not in ids


def test_embedding_locked_once(tmp_path):
    engine = Engine(fast_config(), tmp_path)
    session = engine.create_session("s1")
    engine.run_turn(session, "a dog in a park")
    first = session.db.get("1").embedding
    engine.run_turn(session, "the dog runs")
    assert session.db.get("1").embedding == first


def test_failed_draw_leaves_session_unchanged(tmp_path, monkeypatch):
    engine = Engine(fast_config(), tmp_path)
    session = engine.create_session("s1")
    engine.run_turn(session, "a dog in a park")
    before = tree_hashes(session.root)
    db_before = session.db.to_json()

    def boom(request, prior=None):
        from autostudio.errors import BridgeFailure

        raise BridgeFailure("synthetic outage")

    monkeypatch.setattr(engine.drawer, "draw_full", boom)
    with pytest.raises(DrawFailure):
        engine.run_turn(session, "the dog jumps")
    assert tree_hashes(session.root) == before
    assert session.db.to_json() == db_before
    assert len(session.turns) == 1
    monkeypatch.undo()
    record = engine.run_turn(session, "the dog jumps")
    assert record.k == 2


def test_each_ablation_changes_exactly_one_aspect(tmp_path):
    def diag_for(**flags):
        # steps=20 so the default r=0.95 actually injects (t=19 >= 19.0)
        name = "-".join(sorted(flags)) if flags else "base"
        engine = Engine(fast_config(steps=20, **flags), tmp_path / name)
        session = engine.create_session("s")
        record = engine.run_turn(session, "a cat and a dog in a garden")
        return record

    base = diag_for()
    alpha_one = diag_for(alpha_one=True)
    guidance_off = diag_for(guidance_off=True)
    no_supervisor = diag_for(no_supervisor=True)

    # alpha=1: only the fusion weight differs in the echoed params
    assert alpha_one.diagnostics["params_echo"]["alpha"] == 1.0
    assert base.diagnostics["params_echo"]["alpha"] == 0.2
    assert alpha_one.diagnostics["injected_steps"] == base.diagnostics["injected_steps"]
    assert alpha_one.diagnostics["subject_steps"] == base.diagnostics["subject_steps"]

    # guidance off: injection disappears, everything else matches
    diffs = {
        key for key in base.diagnostics
        if base.diagnostics[key] != guidance_off.diagnostics[key]
    }
    assert diffs == {"guidance", "injected_steps"}
    assert guidance_off.diagnostics["injected_steps"] == []

    # no supervisor: advice absent, raw layout goes straight through
    assert no_supervisor.advice is None and base.advice is not None
    assert no_supervisor.diagnostics["params_echo"] == base.diagnostics["params_echo"]


def test_embedding_dim_consistency_per_provenance(tmp_path):
    from autostudio.registry import EmbeddingVector, SimpleEntry, SubjectDatabase

    db = SubjectDatabase()
    db.register(SimpleEntry(caption="dog", id=SubjectId.parse("1")), turn=1)
    db.register(SimpleEntry(caption="cat", id=SubjectId.parse("2")), turn=1)
    db.lock_embedding("1", EmbeddingVector((1.0, 2.0, 3.0), "toy-encoder"))
    with pytest.raises(ValueError):
        db.lock_embedding("2", EmbeddingVector((1.0, 2.0), "toy-encoder"))
    # a different provenance may use its own dimension
    db.lock_embedding("2", EmbeddingVector((1.0, 2.0), "bridge"))


# --- replay ---

def test_replay_determinism_and_artifacts(tmp_path):
    script = write_script(
        tmp_path / "s.json",
        [
            {"prompt": "a dog in a park"},
            {"prompt": "a cat joins the dog"},
        ],
        config={"frame": "128x128", "steps": 10, "toy": {"subject_canvas": 64}},
        seed=7,
    )
    s1 = replay(script, tmp_path / "run1")
    s2 = replay(script, tmp_path / "run2")
    assert tree_hashes(s1.root) == tree_hashes(s2.root)
    assert len(s1.turns) == 2


def test_replay_edit_turn_targets_subject_box(tmp_path):
    script = write_script(
        tmp_path / "s.json",
        [
            {"prompt": "a cat and a dog in a garden"},
            {"prompt": "make the dog golden", "mode": "edit", "edit_target": "2"},
        ],
        config={"frame": "128x128", "steps": 10, "toy": {"subject_canvas": 64}},
        seed=3,
    )
    session = replay(script, tmp_path / "run")
    record = session.turns[1]
    assert record.mode == "edit"
    prev_entry = session.turns[0].final_layout.entry_for(SubjectId.parse("2"))
    assert record.edit_region == prev_entry.box.as_list()
    assert record.diagnostics["mode"] == "edit"


def test_empty_script_empty_session(tmp_path):
    script = write_script(tmp_path / "s.json", [])
    session = replay(script, tmp_path / "run")
    assert session.turns == []


def test_script_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ScriptParseError):
        replay(bad, tmp_path / "x")
    with pytest.raises(ScriptParseError):
        parse_script({"turns": [{"mode": "generate"}]})
    with pytest.raises(ScriptParseError):
        parse_script({"turns": [{"prompt": "x", "mode": "edit"}]})


# --- override ---

def test_override_layout_redraws_and_archives(tmp_path):
    engine = Engine(fast_config(), tmp_path)
    session = engine.create_session("s1")
    record = engine.run_turn(session, "a dog in a park")
    image_before = (session.root / "turn_1" / "image.png").read_bytes()
    doc = [
        {"description": e.description, "box": e.box.as_list(), "id": e.id.render()}
        for e in record.final_layout.entries
    ]
    for item in doc:  # nudge every box 10px left so the redraw differs
        item["box"] = [max(item["box"][0] - 10, 0), *item["box"][1:]]
    updated = engine.override_layout(session, 1, doc)
    assert updated.override is True
    assert updated.revisions == 1
    assert (session.root / "turn_1" / "revisions" / "1" / "image.png").read_bytes() == image_before
    image_after = (session.root / "turn_1" / "image.png").read_bytes()
    assert image_after != image_before
    assert load_turn_layout(session.root, 1).entries[0].box.x == record.final_layout.entries[0].box.x


def test_override_rejects_id_changes(tmp_path):
    engine = Engine(fast_config(), tmp_path)
    session = engine.create_session("s1")
    engine.run_turn(session, "a dog in a park")
    with pytest.raises(SchemaViolation):
        engine.override_layout(session, 1, [{"description": "dog", "box": [0, 0, 50, 50], "id": "9"}])
