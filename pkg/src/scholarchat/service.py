"""HTTP chat service wrapping the dialogue engine.

Endpoints: POST /chat turns user text into a reply (minting a session id
when the client sends none), GET /health reports status and snapshot age,
GET /schema exposes the domain tree, intents, and slots. Requests that
arrive before warm-up finishes receive 503; malformed bodies receive 400.
"""
from __future__ import annotations

import logging
import threading
from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .engine import DialogueEngine, EngineConfig

logger = logging.getLogger(__name__)


class ChatRequest(BaseModel):
    text: str
    session_id: str | None = None
    debug: bool = False


class ChatResponse(BaseModel):
    session_id: str
    reply: str
    debug: dict | None = None


class HealthResponse(BaseModel):
    status: str
    snapshot_fetched_at: str | None = None
    sessions: int = 0


def create_app(
    config: EngineConfig | None = None,
    engine: DialogueEngine | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    """Build the service. With a prebuilt `engine` the app is warm from the
    start; otherwise the engine loads during startup and requests meanwhile
    see 503."""

    holder: dict[str, DialogueEngine | None] = {"engine": engine}
    warmup_lock = threading.Lock()

    def warm_up() -> None:
        with warmup_lock:
            if holder["engine"] is None:
                holder["engine"] = DialogueEngine(config)

    @asynccontextmanager
    async def lifespan(_: FastAPI):
        warm_up()
        yield

    app = FastAPI(title="scholarchat", lifespan=lifespan)

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    def current_engine() -> DialogueEngine | None:
        return holder["engine"]

    @app.post("/chat", response_model=ChatResponse, response_model_exclude_none=True)
    def chat(body: ChatRequest) -> ChatResponse:
        engine = current_engine()
        if engine is None:
            return JSONResponse(status_code=503, content={"detail": "warming up"})
        session_id = body.session_id or engine.new_session_id()
        result = engine.process_turn(session_id, body.text)
        return ChatResponse(
            session_id=session_id,
            reply=result.reply,
            debug=result.debug_dict() if body.debug else None,
        )

    @app.get("/health", response_model=HealthResponse, response_model_exclude_none=True)
    def health() -> HealthResponse:
        engine = current_engine()
        if engine is None:
            return HealthResponse(status="warming")
        return HealthResponse(
            status="ok",
            snapshot_fetched_at=engine.snapshot.fetched_at.isoformat(),
            sessions=engine.session_count(),
        )

    @app.get("/schema")
    def schema() -> dict:
        engine = current_engine()
        if engine is None:
            return JSONResponse(status_code=503, content={"detail": "warming up"})
        return engine.schema_summary()

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
