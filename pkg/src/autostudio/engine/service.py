"""HTTP service over the engine: session lifecycle, turns, layouts, images.

Standard error mapping: 400 for schema/format problems, 404 for unknown
resources, 409 when a turn is already in flight for the session, 502 when a
remote backend fails.
"""

from __future__ import annotations

import logging
import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse, JSONResponse
from pydantic import BaseModel, Field

from ..errors import (
    AgentFailure,
    AutoStudioError,
    BackendUnavailable,
    BridgeFailure,
    DrawFailure,
    MissingPriorTurn,
    SchemaViolation,
    SessionFull,
)
from ..layout.lineformat import layout_to_json
from ..registry import SubjectRecord
from .config import EngineConfig
from .pipeline import Engine
from .session import Session, advice_to_json

logger = logging.getLogger(__name__)


class TurnBody(BaseModel):
    prompt: str
    mode: str = "generate"
    edit_region: list[float] | None = None
    edit_target: str | None = None


class OverrideBody(BaseModel):
    entries: list[dict] = Field(default_factory=list)


def _status_for(exc: AutoStudioError) -> int:
    if isinstance(exc, (SchemaViolation,)):
        return 400
    if isinstance(exc, MissingPriorTurn):
        return 409
    if isinstance(exc, SessionFull):
        return 409
    if isinstance(exc, (BridgeFailure, BackendUnavailable)):
        return 502
    if isinstance(exc, (AgentFailure, DrawFailure)):
        return 500
    return 500


def _subject_json(rec: SubjectRecord) -> dict:
    return {
        "id": rec.id.render(),
        "name": rec.name,
        "captions": {str(k): v for k, v in sorted(rec.caption_by_turn.items())},
        "has_embedding": rec.embedding is not None,
        "components": [_subject_json(c) for c in rec.components],
    }


def _turn_json(session: Session, k: int) -> dict:
    record = session.turn(k)
    return {
        "k": record.k,
        "prompt": record.prompt,
        "mode": record.mode,
        "image_url": f"/session/{session.id}/image/{record.k}",
        "layout_url": f"/session/{session.id}/layout/{record.k}",
        "layout": layout_to_json(record.final_layout),
        "advice": advice_to_json(record.advice),
        "diagnostics": record.diagnostics,
        "override": record.override,
        "revisions": record.revisions,
        "edit_region": record.edit_region,
    }


def create_app(engine: Engine, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="autostudio engine", version="1")
    sessions: dict[str, Session] = {}
    locks: dict[str, threading.Lock] = {}
    registry_lock = threading.Lock()

    def get_session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        return session

    @app.exception_handler(AutoStudioError)
    async def autostudio_error(request, exc: AutoStudioError):
        return JSONResponse(
            status_code=_status_for(exc),
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/rules")
    def rules():
        return engine.rules.to_json()

    @app.post("/session", status_code=201)
    def create_session(overrides: dict | None = None):
        try:
            session = engine.create_session(overrides=overrides or {})
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        with registry_lock:
            sessions[session.id] = session
            locks[session.id] = threading.Lock()
        return {"id": session.id, "config": session.config.to_json()}

    @app.get("/session/{session_id}/state")
    def state(session_id: str):
        session = get_session(session_id)
        return {
            "id": session.id,
            "config": session.config.to_json(),
            "turns": [_turn_json(session, t.k) for t in session.turns],
            "subjects": [_subject_json(r) for r in session.db.subjects()],
        }

    @app.post("/session/{session_id}/turn")
    def turn(session_id: str, body: TurnBody):
        session = get_session(session_id)
        lock = locks[session_id]
        if not lock.acquire(blocking=False):
            raise HTTPException(status_code=409, detail="turn in flight")
        try:
            record = engine.run_turn(
                session,
                body.prompt,
                mode=body.mode,
                edit_region=body.edit_region,
                edit_target=body.edit_target,
            )
        finally:
            lock.release()
        return _turn_json(session, record.k)

    @app.get("/session/{session_id}/image/{k}")
    def image(session_id: str, k: int):
        session = get_session(session_id)
        path = session.turn_dir(k) / "image.png"
        if not path.exists():
            raise HTTPException(status_code=404, detail=f"no image for turn {k}")
        return FileResponse(path, media_type="image/png")

    @app.get("/session/{session_id}/layout/{k}")
    def layout(session_id: str, k: int):
        session = get_session(session_id)
        try:
            record = session.turn(k)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        return layout_to_json(record.final_layout)

    @app.post("/session/{session_id}/layout/{k}/override")
    def override(session_id: str, k: int, body: OverrideBody):
        session = get_session(session_id)
        try:
            session.turn(k)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        lock = locks[session_id]
        if not lock.acquire(blocking=False):
            raise HTTPException(status_code=409, detail="turn in flight")
        try:
            record = engine.override_layout(session, k, body.entries)
        finally:
            lock.release()
        return _turn_json(session, record.k)

    if ui_dir and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def parse_addr(addr: str) -> tuple[str, int]:
    """Split host:port; a bare ":8080" binds the loopback interface."""
    host, sep, port = addr.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"address must look like HOST:PORT or :PORT, got {addr!r}")
    return host or "127.0.0.1", int(port)


def serve(
    addr: str,
    config: EngineConfig,
    root: str | Path,
    ui_dir: str | None = None,
) -> None:
    import uvicorn

    engine = Engine(config, root)
    app = create_app(engine, ui_dir=ui_dir)
    host, port = parse_addr(addr)
    uvicorn.run(app, host=host, port=port, log_level="info")
