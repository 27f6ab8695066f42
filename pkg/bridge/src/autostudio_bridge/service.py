"""The bridge HTTP surface: POST /draw and GET /capabilities.

One request at a time per process (one GPU): concurrent draws queue on a
lock. Schema-version or validation failures map to 400; backbone errors to
500 with the message preserved.
"""

from __future__ import annotations

import logging
import threading

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse

from .backbone import make_backbone
from .config import BridgeConfig
from .wire import WireError, validate_request, validate_response

logger = logging.getLogger(__name__)


def create_app(config: BridgeConfig | None = None) -> FastAPI:
    config = config or BridgeConfig()
    backbone = make_backbone(config)
    app = FastAPI(title="autostudio bridge", version="1")
    draw_lock = threading.Lock()

    @app.exception_handler(WireError)
    async def wire_error(request: Request, exc: WireError):
        return JSONResponse(status_code=400, content={"error": "WireError", "detail": str(exc)})

    @app.get("/capabilities")
    def capabilities():
        return config.capabilities()

    @app.post("/draw")
    def draw(doc: dict):
        validate_request(doc)
        with draw_lock:
            try:
                response = backbone.draw(doc)
            except WireError:
                raise
            except Exception as exc:
                logger.exception("draw failed")
                raise HTTPException(status_code=500, detail=str(exc)) from exc
        validate_response(response)
        return response

    return app


def serve(addr: str, config: BridgeConfig) -> None:
    import uvicorn

    host, _, port = addr.rpartition(":")
    if not port.isdigit():
        raise ValueError(f"address must look like HOST:PORT, got {addr!r}")
    uvicorn.run(create_app(config), host=host or "127.0.0.1", port=int(port))
