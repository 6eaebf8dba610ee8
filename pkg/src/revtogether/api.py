"""HTTP boundary: session routes, workflow mutations, and the event stream.

The API layer holds no state of its own. Every mutation goes through a
SessionEngine and is autosaved to the store, so a restarted server serves
identical reads after rehydrating from disk. Updates flow to clients over a
one-way server-sent-event stream per session; there is no client-to-agent
chat channel anywhere.
"""

from __future__ import annotations

import asyncio
import os
import threading
import uuid
from contextlib import asynccontextmanager
from pathlib import Path
from typing import Callable, Optional

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .assets import asset_root
from .clock import Clock, SystemClock
from .document import EditOperation
from .engine import (
    SessionEngine,
    comment_to_dict,
    document_to_dict,
    event_to_dict,
    highlight_to_dict,
    proposal_to_dict,
    session_to_dict,
    suggestion_to_dict,
)
from .errors import (
    RevTogetherError,
    SchemaViolationExhaustedError,
    VersionMismatchError,
    error_code,
)
from .gateway import Gateway, ProviderConfig
from .store import SessionStore, canonical_json

_STATUS_BY_CODE = {
    "version_mismatch": 409,
    "not_found": 404,
    "illegal_transition": 409,
    "gateway_failure": 502,
    "invalid_selection": 422,
    "stale_proposal": 409,
    "integrity": 500,
}

# How often the event stream checks for fresh events.
_STREAM_POLL_SECONDS = 0.1


class CreateSessionBody(BaseModel):
    text: str = ""


class EditBody(BaseModel):
    at: int
    deleted_len: int
    inserted: str
    base_version: int


class CommentRequestBody(BaseModel):
    persona_id: str
    start: int
    end: int


class DecisionBody(BaseModel):
    decision: str


class SessionService:
    """Engines by session id, lazily rehydrated from the store."""

    def __init__(self, store: SessionStore, gateway: Gateway, clock: Clock):
        self.store = store
        self.gateway = gateway
        self.clock = clock
        self.engines: dict[str, SessionEngine] = {}
        self._mutex = threading.Lock()

    def create_session(self, initial_text: str) -> SessionEngine:
        session_id = uuid.uuid4().hex[:12]
        engine = SessionEngine.create(session_id, initial_text, self.gateway, self.clock)
        with self._mutex:
            self.engines[session_id] = engine
        self.store.save(engine.session, engine.events)
        return engine

    def get_engine(self, session_id: str) -> SessionEngine:
        with self._mutex:
            engine = self.engines.get(session_id)
            if engine is not None:
                return engine
        # Not in memory: rehydrate from disk (raises not-found if absent).
        session, events = self.store.load(session_id)
        self.store.acquire(session_id)
        engine = SessionEngine(
            session, self.gateway, self.clock, events=events
        )
        with self._mutex:
            return self.engines.setdefault(session_id, engine)

    def mutate(self, session_id: str, fn: Callable[[SessionEngine], object]):
        """Run one operation and autosave whatever events it produced.

        Failed gateway calls still append an error event, so the save happens
        whenever the log grew, not only on success.
        """
        engine = self.get_engine(session_id)
        with engine.lock:
            before = len(engine.events)
            try:
                return fn(engine)
            finally:
                if len(engine.events) > before:
                    self.store.save(engine.session, engine.events)

    def shutdown(self) -> None:
        with self._mutex:
            engines = list(self.engines.values())
        for engine in engines:
            with engine.lock:
                self.store.save(engine.session, engine.events)
        self.store.close()


def create_app(
    *,
    data_dir: Optional[str] = None,
    provider_config: Optional[ProviderConfig] = None,
    gateway: Optional[Gateway] = None,
    clock: Optional[Clock] = None,
    store: Optional[SessionStore] = None,
) -> FastAPI:
    """Build the application; arguments override the REVT_* environment."""
    if store is None:
        store = SessionStore(data_dir or os.environ.get("REVT_DATA_DIR", "data"))
    if gateway is None:
        gateway = Gateway.from_config(provider_config or ProviderConfig.from_env())
    service = SessionService(store, gateway, clock or SystemClock())

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        service.shutdown()

    app = FastAPI(title="revtogether", lifespan=lifespan)
    app.state.service = service

    @app.exception_handler(RevTogetherError)
    async def workflow_error(request: Request, exc: RevTogetherError):
        code = error_code(exc)
        detail: dict = {}
        if isinstance(exc, VersionMismatchError):
            detail = {"current_version": exc.current, "expected_version": exc.expected}
        elif isinstance(exc, SchemaViolationExhaustedError):
            detail = {"attempts": exc.attempts}
        return JSONResponse(
            status_code=_STATUS_BY_CODE[code],
            content={"error": {"code": code, "message": str(exc), "detail": detail}},
        )

    @app.exception_handler(RequestValidationError)
    async def body_error(request: Request, exc: RequestValidationError):
        # Malformed bodies get the same envelope as workflow errors so
        # clients parse a single error shape.
        return JSONResponse(
            status_code=422,
            content={
                "error": {
                    "code": "invalid_selection",
                    "message": "invalid request body",
                    "detail": {"errors": exc.errors()},
                }
            },
        )

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/v1/sessions")
    def create_session(body: CreateSessionBody):
        engine = service.create_session(body.text)
        with engine.lock:
            return session_to_dict(engine.session)

    @app.get("/v1/sessions/{session_id}")
    def get_session(session_id: str):
        engine = service.get_engine(session_id)
        with engine.lock:
            return session_to_dict(engine.session)

    @app.post("/v1/sessions/{session_id}/edits")
    def post_edit(session_id: str, body: EditBody):
        edit = EditOperation(
            at=body.at,
            deleted_len=body.deleted_len,
            inserted=body.inserted,
            base_version=body.base_version,
        )
        document = service.mutate(session_id, lambda e: e.writer_edit(edit))
        return document_to_dict(document)

    @app.post("/v1/sessions/{session_id}/comment-requests")
    def post_comment_request(session_id: str, body: CommentRequestBody):
        comment = service.mutate(
            session_id,
            lambda e: e.request_comment(body.persona_id, body.start, body.end),
        )
        return comment_to_dict(comment)

    @app.post("/v1/sessions/{session_id}/comments/{comment_id}/decision")
    def post_decision(session_id: str, comment_id: str, body: DecisionBody):
        if body.decision not in ("accept", "reject"):
            raise RequestValidationError(
                [{"loc": ("body", "decision"), "msg": "must be accept or reject"}]
            )

        def run(engine: SessionEngine):
            if body.decision == "accept":
                suggestions = engine.accept_comment(comment_id)
            else:
                engine.reject_comment(comment_id)
                suggestions = []
            return {
                "comment": comment_to_dict(engine.session.comments[comment_id]),
                "suggestions": [suggestion_to_dict(s) for s in suggestions],
            }

        return service.mutate(session_id, run)

    @app.post("/v1/sessions/{session_id}/suggestions/{suggestion_id}/select")
    def post_technique_selection(session_id: str, suggestion_id: str):
        highlights = service.mutate(session_id, lambda e: e.select_technique(suggestion_id))
        return {"highlights": [highlight_to_dict(h) for h in highlights]}

    @app.post("/v1/sessions/{session_id}/highlights/{highlight_id}/revision")
    def post_revision_request(session_id: str, highlight_id: str):
        proposal = service.mutate(session_id, lambda e: e.request_revision(highlight_id))
        return proposal_to_dict(proposal)

    @app.post("/v1/sessions/{session_id}/proposals/{proposal_id}/adopt")
    def post_adoption(session_id: str, proposal_id: str):
        document = service.mutate(session_id, lambda e: e.adopt_revision(proposal_id))
        return document_to_dict(document)

    @app.get("/v1/sessions/{session_id}/events")
    async def event_stream(
        session_id: str,
        from_seq: int = Query(0, alias="from"),
        live: bool = Query(True),
    ):
        # The engine lookup happens before streaming starts so an unknown
        # session is a clean 404, not a broken stream.
        engine = await asyncio.to_thread(service.get_engine, session_id)

        async def stream():
            # A client disconnect cancels this task; only ``live=false``
            # readers get an explicit end after the history drains.
            cursor = max(from_seq, 0)
            while True:
                for event in engine.events_since(cursor):
                    cursor = event.seq
                    data = canonical_json(event_to_dict(event))
                    yield f"id: {event.seq}\nevent: {event.kind}\ndata: {data}\n\n"
                if not live:
                    return
                await asyncio.sleep(_STREAM_POLL_SECONDS)

        return StreamingResponse(
            stream(),
            media_type="text/event-stream",
            headers={"Cache-Control": "no-cache", "X-Accel-Buffering": "no"},
        )

    avatar_dir = Path(str(asset_root())) / "avatars"
    if avatar_dir.is_dir():
        app.mount("/avatars", StaticFiles(directory=avatar_dir), name="avatars")

    return app
