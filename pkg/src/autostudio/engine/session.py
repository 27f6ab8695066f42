"""Session state and on-disk layout.

A session directory holds `session.json` (index), `db.json` (subject
database snapshot) and one `turn_<k>/` directory per completed turn. Turn
directories are written to a temp path and renamed into place, and the index
is rewritten last, so a crash mid-turn leaves the prior state intact.
"""

from __future__ import annotations

import json
import os
import shutil
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..agents.outputs import serialize_manager_output
from ..errors import IoFailure, ScriptParseError
from ..layout.lineformat import layout_from_json, layout_to_json, serialize_layout
from ..model import (
    ManagerComponentEntry,
    ManagerOutput,
    ManagerSubjectEntry,
    RawLayout,
    SubjectId,
    SupervisorAdvice,
)
from ..registry import SubjectDatabase
from .config import EngineConfig

SESSION_SCHEMA = "autostudio-session@1"


def manager_to_json(output: ManagerOutput) -> dict:
    return {
        "global_caption": output.global_caption,
        "background_caption": output.background_caption,
        "subjects": [
            {
                "caption": s.caption,
                "id": s.id.render(),
                "components": [
                    {"caption": c.caption, "id": c.id.render()} for c in s.components
                ],
            }
            for s in output.subjects
        ],
    }


def manager_from_json(doc: dict) -> ManagerOutput:
    return ManagerOutput(
        global_caption=doc["global_caption"],
        background_caption=doc["background_caption"],
        subjects=[
            ManagerSubjectEntry(
                caption=s["caption"],
                id=SubjectId.parse(s["id"]),
                components=[
                    ManagerComponentEntry(caption=c["caption"], id=SubjectId.parse(c["id"]))
                    for c in s.get("components", [])
                ],
            )
            for s in doc.get("subjects", [])
        ],
    )


def advice_to_json(advice: SupervisorAdvice | None) -> dict | None:
    if advice is None:
        return None
    doc: dict = {"suggestions": advice.suggestions, "compliant": advice.compliant}
    if advice.revised_layout is not None:
        doc["revised_layout"] = layout_to_json(advice.revised_layout)
    return doc


@dataclass
class TurnRecord:
    k: int
    prompt: str
    mode: str
    manager: ManagerOutput
    raw_layout: RawLayout
    advice: SupervisorAdvice | None
    final_layout: RawLayout
    image_path: str
    diagnostics: dict = field(default_factory=dict)
    edit_region: list | None = None
    override: bool = False
    revisions: int = 0

    def index_entry(self) -> dict:
        return {
            "k": self.k,
            "prompt": self.prompt,
            "mode": self.mode,
            "image": self.image_path,
            "override": self.override,
            "revisions": self.revisions,
        }


@dataclass
class Session:
    id: str
    config: EngineConfig
    root: Path
    turns: list[TurnRecord] = field(default_factory=list)
    db: SubjectDatabase = field(default_factory=SubjectDatabase)

    @property
    def next_turn_index(self) -> int:
        return len(self.turns) + 1

    def turn_dir(self, k: int) -> Path:
        return self.root / f"turn_{k}"

    def turn(self, k: int) -> TurnRecord:
        if not 1 <= k <= len(self.turns):
            raise KeyError(f"turn {k} does not exist")
        return self.turns[k - 1]

    # -- persistence --

    def persist_turn(self, record: TurnRecord, files: dict[str, bytes | str | np.lib.npyio.NpzFile | dict]) -> None:
        """Write one turn's artifacts atomically, then update the index.

        `files` maps artifact names to bytes (written raw), dicts (JSON) or
        str (UTF-8 text); latent state arrays arrive pre-serialized as bytes.
        """
        self.root.mkdir(parents=True, exist_ok=True)
        final_dir = self.turn_dir(record.k)
        tmp_dir = Path(tempfile.mkdtemp(dir=self.root, prefix=f".turn_{record.k}_"))
        try:
            for name, payload in files.items():
                path = tmp_dir / name
                if isinstance(payload, bytes):
                    path.write_bytes(payload)
                elif isinstance(payload, dict):
                    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
                else:
                    path.write_text(str(payload), encoding="utf-8")
            revisions = final_dir / "revisions"
            if revisions.exists():
                shutil.copytree(revisions, tmp_dir / "revisions")
            if final_dir.exists():
                shutil.rmtree(final_dir)
            os.replace(tmp_dir, final_dir)
        except OSError as exc:
            shutil.rmtree(tmp_dir, ignore_errors=True)
            raise IoFailure(f"cannot persist turn {record.k}: {exc}") from exc
        self.db.snapshot(self.root)
        self._write_index()

    def archive_revision(self, k: int) -> int:
        """Move the turn's current image/layout into revisions/<n>; returns n."""
        record = self.turn(k)
        turn_dir = self.turn_dir(k)
        n = record.revisions + 1
        dest = turn_dir / "revisions" / str(n)
        dest.mkdir(parents=True, exist_ok=True)
        for name in ("image.png", "layout.txt", "layout.json", "diagnostics.json"):
            src = turn_dir / name
            if src.exists():
                shutil.copy2(src, dest / name)
        return n

    def _write_index(self) -> None:
        doc = {
            "schema": SESSION_SCHEMA,
            "id": self.id,
            "config": self.config.to_json(),
            "turns": [t.index_entry() for t in self.turns],
        }
        fd, tmp = tempfile.mkstemp(dir=self.root, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
        os.replace(tmp, self.root / "session.json")

    def turn_files(self, record: TurnRecord, image_png: bytes, request_doc: dict,
                   state_blob: bytes | None) -> dict:
        files = {
            "image.png": image_png,
            "layout.txt": serialize_layout(record.final_layout),
            "layout.json": layout_to_json(record.final_layout),
            "raw_layout.json": layout_to_json(record.raw_layout),
            "manager.json": manager_to_json(record.manager),
            "manager.txt": serialize_manager_output(record.manager),
            "diagnostics.json": record.diagnostics,
            "request.json": request_doc,
            "turn.json": {
                "k": record.k,
                "prompt": record.prompt,
                "mode": record.mode,
                "edit_region": record.edit_region,
                "advice": advice_to_json(record.advice),
                "override": record.override,
            },
        }
        if state_blob is not None:
            files["state.npz"] = state_blob
        return files


def load_session_index(root: str | os.PathLike) -> dict:
    """Read the light-weight session index (for reporting and inspection)."""
    path = Path(root) / "session.json"
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if doc.get("schema") != SESSION_SCHEMA:
        raise IoFailure(f"unexpected session schema {doc.get('schema')!r}")
    return doc


def load_turn_layout(root: str | os.PathLike, k: int) -> RawLayout:
    path = Path(root) / f"turn_{k}" / "layout.json"
    try:
        with open(path, encoding="utf-8") as fh:
            return layout_from_json(json.load(fh))
    except (OSError, json.JSONDecodeError) as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc


def parse_script(doc: dict) -> tuple[dict, list[dict]]:
    """Validate a replay script: config overrides plus an ordered turn list."""
    if not isinstance(doc, dict) or "turns" not in doc:
        raise ScriptParseError("script must be an object with a 'turns' list")
    turns = doc["turns"]
    if not isinstance(turns, list):
        raise ScriptParseError("'turns' must be a list")
    parsed = []
    for i, turn in enumerate(turns, start=1):
        if not isinstance(turn, dict) or "prompt" not in turn:
            raise ScriptParseError(f"turn {i}: each turn needs a 'prompt'")
        mode = turn.get("mode", "generate")
        if mode not in ("generate", "edit"):
            raise ScriptParseError(f"turn {i}: mode must be generate or edit, got {mode!r}")
        if mode == "edit" and not (turn.get("edit_target") or turn.get("edit_region")):
            raise ScriptParseError(f"turn {i}: edit turns need edit_target or edit_region")
        parsed.append(
            {
                "prompt": str(turn["prompt"]),
                "mode": mode,
                "edit_target": turn.get("edit_target"),
                "edit_region": turn.get("edit_region"),
            }
        )
    config = doc.get("config", {})
    if not isinstance(config, dict):
        raise ScriptParseError("'config' must be an object")
    if "seed" in doc:
        config = dict(config, seed=doc["seed"])
    return config, parsed
