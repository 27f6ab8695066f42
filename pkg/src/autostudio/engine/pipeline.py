"""The per-turn pipeline: manager, layout, supervisor loop, refiner, drawer.

A turn either commits atomically (records, artifacts, database update) or
leaves the session exactly as it was; agent and drawer failures surface as
AgentFailure/DrawFailure with the session still usable.
"""

from __future__ import annotations

import io
import json
import logging
import uuid
from pathlib import Path

import numpy as np

from ..agents.backends import make_backend
from ..agents.loops import AgentPipeline
from ..drawer.http_drawer import HttpDrawer
from ..drawer.protocol import (
    DrawComponent,
    DrawParams,
    DrawRequest,
    DrawSubject,
    request_to_json,
)
from ..drawer.schedule import derive_seed
from ..drawer.toy_drawer import PriorTurn, ToyDrawer, png_to_array
from ..errors import (
    AgentFailure,
    AutoStudioError,
    DrawFailure,
    MissingPriorTurn,
    ScriptParseError,
    SessionFull,
    SchemaViolation,
    Unsatisfiable,
)
from ..layout.lineformat import layout_from_json, layout_to_json
from ..layout.refine import refine_rule_based
from ..layout.rules import DEFAULT_RULEBOOK, Rulebook, validate
from ..model import BoundingBox, ManagerOutput, RawLayout, SubjectId, SupervisorAdvice
from ..registry import SubjectDatabase
from .config import EngineConfig
from .session import Session, TurnRecord, parse_script

logger = logging.getLogger(__name__)


class Engine:
    """Runs sessions against one configured backend and drawer."""

    def __init__(self, config: EngineConfig, root: str | Path, rules: Rulebook | None = None):
        self.config = config
        self.root = Path(root)
        self.rules = rules or DEFAULT_RULEBOOK
        backend_kwargs = {}
        if config.backend == "http":
            if not config.chat_endpoint:
                raise ValueError("http backend requires chat_endpoint")
            backend_kwargs = {
                "endpoint": config.chat_endpoint,
                "model": config.chat_model,
                "api_key": config.chat_key,
            }
        elif config.transcript_path:
            backend_kwargs = {"transcript_path": config.transcript_path}
        self.backend = make_backend(config.backend, **backend_kwargs)
        self.agents = AgentPipeline(self.backend, retries=config.retries)
        self.drawer = self._make_drawer(config)

    def _make_drawer(self, config: EngineConfig):
        if config.drawer == "http":
            if not config.draw_endpoint:
                raise ValueError("http drawer requires draw_endpoint")
            return HttpDrawer(config.draw_endpoint)
        return ToyDrawer(config.toy, workers=config.subject_workers)

    def _drawer_for(self, session: Session):
        """Sessions may override drawer settings; honor the session config."""
        if session.config is self.config:
            return self.drawer
        return self._make_drawer(session.config)

    # -- session lifecycle --

    def create_session(self, session_id: str | None = None, overrides: dict | None = None) -> Session:
        config = self.config.with_overrides(overrides) if overrides else self.config
        sid = session_id or uuid.uuid4().hex[:12]
        session = Session(id=sid, config=config, root=self.root / sid)
        return session

    # -- the turn pipeline --

    def run_turn(
        self,
        session: Session,
        prompt: str,
        mode: str = "generate",
        edit_region: list | BoundingBox | None = None,
        edit_target: str | None = None,
    ) -> TurnRecord:
        if len(session.turns) >= session.config.max_turns:
            raise SessionFull(f"session limit of {session.config.max_turns} turns reached")
        if not prompt or not prompt.strip():
            raise AgentFailure("empty prompt")
        if mode not in ("generate", "edit"):
            raise AgentFailure(f"unknown mode {mode!r}")

        config = session.config
        k = session.next_turn_index
        turn_seed = derive_seed(config.seed, "turn", k)

        history = [(t.manager, t.prompt) for t in session.turns]
        if config.history_window > 0:
            history = history[-config.history_window:]

        try:
            manager = self.agents.run_manager(prompt, history, seed=turn_seed)
            raw_layout, advice, final_layout, override = self._layout_stage(
                manager, session, turn_seed
            )
        except AutoStudioError as exc:
            if isinstance(exc, (AgentFailure, SessionFull)):
                raise
            raise AgentFailure(f"turn {k} agents failed: {exc}") from exc

        region = self._resolve_edit_region(session, mode, edit_region, edit_target)

        db = SubjectDatabase.from_json(session.db.to_json())
        for entry in manager.subjects:
            db.register(entry, turn=k)

        request = self._build_request(
            config, db, manager, final_layout, turn_seed, mode, region
        )
        prior = self._load_prior(session) if mode == "edit" else None

        drawer = self._drawer_for(session)
        try:
            if isinstance(drawer, ToyDrawer):
                response, artifacts = drawer.draw_full(request, prior)
                state_blob = _pack_state(artifacts.trajectory, artifacts.final_latent)
            else:
                response = drawer.draw(request, prior)
                state_blob = None
        except MissingPriorTurn:
            raise
        except AutoStudioError as exc:
            raise DrawFailure(f"turn {k} draw failed: {exc}") from exc

        for item in response.per_subject:
            if item.embedding is None or item.id not in db:
                continue
            if db.get(item.id).embedding is None:
                db.lock_embedding(item.id, item.embedding)

        record = TurnRecord(
            k=k,
            prompt=prompt,
            mode=mode,
            manager=manager,
            raw_layout=raw_layout,
            advice=advice,
            final_layout=final_layout,
            image_path=f"turn_{k}/image.png",
            diagnostics=response.diagnostics,
            edit_region=region.as_list() if region else None,
            override=override,
        )
        session.db = db
        session.turns.append(record)
        try:
            files = session.turn_files(
                record, response.image_png, request_to_json(request), state_blob
            )
            session.persist_turn(record, files)
        except Exception:
            session.turns.pop()
            raise
        return record

    def _layout_stage(
        self, manager: ManagerOutput, session: Session, turn_seed: int
    ) -> tuple[RawLayout, SupervisorAdvice | None, RawLayout, bool]:
        config = session.config
        prior_layouts = [t.final_layout for t in session.turns[-2:]]
        raw_layout = self.agents.run_layout(
            config.frame, manager, prior_layouts=prior_layouts, seed=turn_seed
        )
        advice: SupervisorAdvice | None = None
        current = raw_layout
        if not config.no_supervisor and manager.subjects:
            for _ in range(config.refine_rounds):
                advice = self.agents.run_supervisor(current, seed=turn_seed)
                if advice.compliant:
                    break
                current = self.agents.run_layout(
                    config.frame, manager, advice=advice,
                    prior_layouts=[current], seed=turn_seed,
                )
        violations = validate(current, self.rules)
        override = False
        if violations:
            try:
                current = refine_rule_based(current, violations, self.rules)
            except Unsatisfiable as exc:
                raise AgentFailure(f"layout unsatisfiable: {exc}") from exc
            violations = validate(current, self.rules)
        if violations:
            if config.strict:
                raise AgentFailure(
                    f"layout still has {len(violations)} violations after refinement"
                )
            override = True
        return raw_layout, advice, current, override

    def _resolve_edit_region(
        self,
        session: Session,
        mode: str,
        edit_region: list | BoundingBox | None,
        edit_target: str | None,
    ) -> BoundingBox | None:
        if mode != "edit":
            return None
        if edit_region is not None:
            if isinstance(edit_region, BoundingBox):
                return edit_region
            return BoundingBox(*(float(v) for v in edit_region))
        if edit_target:
            if not session.turns:
                raise MissingPriorTurn("edit turn requires a previous turn")
            prev = session.turns[-1].final_layout
            entry = prev.entry_for(SubjectId.parse(edit_target))
            if entry is None:
                raise AgentFailure(f"edit target {edit_target!r} has no box in the previous turn")
            return entry.box
        raise AgentFailure("edit turn needs edit_region or edit_target")

    def _build_request(
        self,
        config: EngineConfig,
        db: SubjectDatabase,
        manager: ManagerOutput,
        layout: RawLayout,
        turn_seed: int,
        mode: str,
        region: BoundingBox | None,
    ) -> DrawRequest:
        subjects = []
        for entry in sorted(layout.subject_entries(), key=lambda e: e.id):
            sid = entry.id
            caption = manager.caption_for(sid) or entry.description
            components = [
                DrawComponent(
                    id=ce.id,
                    caption=manager.caption_for(ce.id) or ce.description,
                    box=ce.box,
                )
                for ce in layout.component_entries(sid)
            ]
            embedding = None
            if sid in db and db.get(sid).embedding is not None:
                embedding = db.get(sid).embedding
            subjects.append(
                DrawSubject(
                    id=sid, caption=caption, box=entry.box,
                    components=components, embedding=embedding,
                )
            )
        params = DrawParams(
            r=config.r,
            alpha=1.0 if config.alpha_one else config.alpha,
            beta=config.beta,
            steps=config.steps,
            guidance="off" if config.guidance_off else "on",
            model_seed=config.seed,
        )
        return DrawRequest(
            frame=config.frame,
            global_caption=manager.global_caption,
            background_caption=manager.background_caption,
            subjects=subjects,
            seed=turn_seed,
            mode=mode,
            edit_region=region,
            params=params,
        )

    def _load_prior(self, session: Session) -> PriorTurn:
        if not session.turns:
            raise MissingPriorTurn("edit turn requires a previous turn")
        prev = session.turns[-1]
        turn_dir = session.turn_dir(prev.k)
        state_path = turn_dir / "state.npz"
        image_path = turn_dir / "image.png"
        if not state_path.exists() or not image_path.exists():
            raise MissingPriorTurn(f"previous turn artifacts missing under {turn_dir}")
        with np.load(state_path) as state:
            trajectory = state["trajectory"]
            final = state["final"]
        return PriorTurn(
            trajectory=trajectory,
            final_latent=final,
            image=png_to_array(image_path.read_bytes()),
        )

    # -- layout override (human-in-the-loop) --

    def override_layout(self, session: Session, k: int, entries: list[dict]) -> TurnRecord:
        record = session.turn(k)
        frame = session.config.frame
        doc = {"frame": {"width": frame.width, "height": frame.height}, "entries": entries}
        try:
            new_layout = layout_from_json(doc, manager=record.manager)
        except AutoStudioError as exc:
            raise SchemaViolation(f"override layout malformed: {exc}") from exc
        old_ids = {e.id.render() for e in record.final_layout.entries}
        new_ids = {e.id.render() for e in new_layout.entries}
        if old_ids != new_ids:
            raise SchemaViolation(
                f"override must keep the id set: expected {sorted(old_ids)}, got {sorted(new_ids)}"
            )
        violations = validate(new_layout, self.rules)

        revision = session.archive_revision(k)
        turn_seed = derive_seed(session.config.seed, "turn", k)
        request = self._build_request(
            session.config, session.db, record.manager, new_layout, turn_seed,
            "generate", None,
        )
        drawer = self._drawer_for(session)
        try:
            if isinstance(drawer, ToyDrawer):
                response, artifacts = drawer.draw_full(request)
                state_blob = _pack_state(artifacts.trajectory, artifacts.final_latent)
            else:
                response = drawer.draw(request)
                state_blob = None
        except AutoStudioError as exc:
            raise DrawFailure(f"override redraw failed: {exc}") from exc

        record.final_layout = new_layout
        record.override = True
        record.revisions = revision
        record.diagnostics = dict(response.diagnostics)
        record.diagnostics["override"] = {
            "revision": revision,
            "origin": "user",
            "violations": [v.message for v in violations],
        }
        files = session.turn_files(record, response.image_png, request_to_json(request), state_blob)
        session.persist_turn(record, files)
        return record


def _pack_state(trajectory: np.ndarray, final: np.ndarray) -> bytes:
    buf = io.BytesIO()
    np.savez_compressed(buf, trajectory=trajectory, final=final)
    return buf.getvalue()


def replay(
    script_path: str | Path,
    root: str | Path,
    base_config: EngineConfig | None = None,
    session_id: str = "session",
) -> Session:
    """Run a scripted dialogue end to end; deterministic for mock+toy setups."""
    try:
        with open(script_path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ScriptParseError(f"cannot read script: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScriptParseError(f"script is not valid JSON: {exc}") from exc
    overrides, turns = parse_script(doc)
    config = (base_config or EngineConfig()).with_overrides(overrides)
    engine = Engine(config, root)
    session = engine.create_session(session_id)
    for turn in turns:
        engine.run_turn(
            session,
            turn["prompt"],
            mode=turn["mode"],
            edit_region=turn["edit_region"],
            edit_target=turn["edit_target"],
        )
        logger.info("turn %d complete", session.turns[-1].k)
    return session
