"""HTTP/JSON facade over the adventure engine.

All bodies are JSON; domain errors map to {"code", "message"} with a fixed
status per error type (see README for the full table). Each session exposes
a server-push event stream (text/event-stream) carrying gate status, score
changes, badge grants and stage transitions, one message per state-changing
commit, in order. Slow stream consumers are dropped once their backlog
exceeds a bound.
"""

from __future__ import annotations

import json
import queue
import secrets
import threading
import time
from pathlib import Path

from fastapi import FastAPI, Header, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel, Field

from .beacon import BeaconId
from .catalog import Catalog, list_adventures
from .engine import AdventureService, EngineEvent
from .errors import (
    InvalidCredentials,
    InvalidScanEvent,
    MargeError,
    Unauthorized,
    Forbidden,
)
from .proximity import ScanEvent
from .store import DocumentStore

TOKEN_TTL_MS = 24 * 60 * 60 * 1000
STREAM_BACKLOG = 256


class SessionEventBus:
    """Fan-out of engine events to per-session subscriber queues."""

    def __init__(self, backlog: int = STREAM_BACKLOG):
        self._backlog = backlog
        self._subscribers: dict[str, list[queue.Queue]] = {}
        self._lock = threading.Lock()

    def publish(self, events: list[EngineEvent]) -> None:
        with self._lock:
            for event in events:
                if event.session_id is None:
                    continue
                for q in list(self._subscribers.get(event.session_id, [])):
                    try:
                        q.put_nowait(event.to_dict())
                    except queue.Full:
                        # slow consumer: drop the whole subscription
                        self._subscribers[event.session_id].remove(q)

    def subscribe(self, session_id: str) -> queue.Queue:
        q: queue.Queue = queue.Queue(maxsize=self._backlog)
        with self._lock:
            self._subscribers.setdefault(session_id, []).append(q)
        return q

    def unsubscribe(self, session_id: str, q: queue.Queue) -> None:
        with self._lock:
            subs = self._subscribers.get(session_id, [])
            if q in subs:
                subs.remove(q)


# --- request bodies -------------------------------------------------------------

class CredentialsBody(BaseModel):
    login_id: str
    secret: str


class LanguageBody(BaseModel):
    language: str


class StartSessionBody(BaseModel):
    adventure_id: str
    confirm_replay: bool = False


class ResumeBody(BaseModel):
    choice: str  # "resume" | "restart"


class AdvanceBody(BaseModel):
    input: str  # "ack" | "gate" | "quiz"


class AnswerBody(BaseModel):
    question_index: int
    choice_index: int


class ScanEventBody(BaseModel):
    t_ms: int
    uuid: str
    major: int
    minor: int
    rssi: int


class ScanBatchBody(BaseModel):
    events: list[ScanEventBody] = Field(default_factory=list)


class FeedbackBody(BaseModel):
    text: str


def create_app(catalog: Catalog, store: DocumentStore, ui_dir: str | Path | None = None) -> FastAPI:
    service = AdventureService(catalog, store)
    bus = SessionEventBus()
    app = FastAPI(title="marge", version="0.1.0")
    app.state.service = service
    app.state.bus = bus

    # -- error mapping ------------------------------------------------------

    @app.exception_handler(MargeError)
    async def domain_error(request: Request, exc: MargeError):
        return JSONResponse(
            status_code=exc.http_status, content={"code": exc.code, "message": str(exc)}
        )

    @app.exception_handler(RequestValidationError)
    async def body_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"code": "BadRequest", "message": str(exc.errors())})

    # -- auth ----------------------------------------------------------------

    def issue_token(user_id: str) -> dict:
        token = secrets.token_urlsafe(24)
        expires = int(time.time() * 1000) + TOKEN_TTL_MS
        store.put_document(f"auth/tokens/{token}", {"user_id": user_id, "expires_at_ms": expires})
        return {"user_id": user_id, "token": token, "expires_at_ms": expires}

    def require_user(authorization: str | None) -> str:
        if not authorization or not authorization.startswith("Bearer "):
            raise Unauthorized("missing bearer token")
        token = authorization.removeprefix("Bearer ").strip()
        record = store.get_or(f"auth/tokens/{token}")
        if record is None:
            raise Unauthorized("unknown token")
        if record["expires_at_ms"] < int(time.time() * 1000):
            raise Unauthorized("token expired")
        return record["user_id"]

    def require_session_owner(session_id: str, authorization: str | None):
        user_id = require_user(authorization)
        session = service.load_session(session_id)
        if session.user_id != user_id:
            raise Forbidden("session belongs to another user")
        return user_id

    @app.post("/auth/register", status_code=201)
    def register(body: CredentialsBody):
        user_id = store.register_user(body.login_id, body.secret)
        return issue_token(user_id)

    @app.post("/auth/login")
    def login(body: CredentialsBody):
        if not store.verify_user(body.login_id, body.secret):
            raise InvalidCredentials("bad login id or secret")
        return issue_token(store.user_id_for(body.login_id))

    @app.post("/auth/forgot-password", status_code=501)
    def forgot_password():
        # needs an email channel this deployment does not have
        return {"code": "NotImplemented", "message": "password recovery is not available"}

    # -- catalog ---------------------------------------------------------------

    @app.get("/catalog")
    def catalog_cards(lang: str = Query(default=None)):
        language = lang or catalog.languages[0]
        return {"languages": list(catalog.languages), "adventures": list_adventures(catalog, language)}

    @app.get("/catalog/{adventure_id}")
    def catalog_detail(adventure_id: str, lang: str = Query(default=None)):
        language = catalog.require_language(lang or catalog.languages[0])
        adventure = catalog.adventure(adventure_id)
        card = next(c for c in list_adventures(catalog, language) if c["id"] == adventure_id)
        card["stage_kinds"] = [stage.kind for stage in adventure.stages]
        return card

    # -- sessions ---------------------------------------------------------------

    @app.post("/sessions")
    def start_session(body: StartSessionBody, authorization: str | None = Header(default=None)):
        user_id = require_user(authorization)
        outcome = service.start_session(user_id, body.adventure_id, body.confirm_replay)
        return {
            "outcome": outcome.kind,
            "session": outcome.session.to_doc() if outcome.session else None,
        }

    @app.get("/sessions/{session_id}")
    def session_view(
        session_id: str,
        lang: str = Query(default=None),
        authorization: str | None = Header(default=None),
    ):
        require_session_owner(session_id, authorization)
        return service.session_view(session_id, lang)

    @app.post("/sessions/{session_id}/resume")
    def resume(session_id: str, body: ResumeBody, authorization: str | None = Header(default=None)):
        require_session_owner(session_id, authorization)
        session = service.resume_or_restart(session_id, body.choice)
        if body.choice == "restart":
            bus.publish(
                [EngineEvent("stage_changed", session_id, {"stage_index": 0, "stage_kind": None})]
            )
        return session.to_doc()

    @app.post("/sessions/{session_id}/advance")
    def advance(session_id: str, body: AdvanceBody, authorization: str | None = Header(default=None)):
        require_session_owner(session_id, authorization)
        session, events = service.advance_stage(session_id, body.input)
        bus.publish(events)
        return {"session": session.to_doc(), "events": [e.to_dict() for e in events]}

    @app.post("/sessions/{session_id}/answer")
    def answer(session_id: str, body: AnswerBody, authorization: str | None = Header(default=None)):
        require_session_owner(session_id, authorization)
        outcome, events = service.answer_quiz(session_id, body.question_index, body.choice_index)
        bus.publish(events)
        return {
            "correct": outcome.correct,
            "correct_index": outcome.correct_index,
            "score_delta": outcome.score_delta,
            "new_score": outcome.new_score,
        }

    @app.post("/sessions/{session_id}/scan-events")
    def scan_events(
        session_id: str, body: ScanBatchBody, authorization: str | None = Header(default=None)
    ):
        require_session_owner(session_id, authorization)
        try:
            events = [
                ScanEvent(BeaconId.from_hex(e.uuid, e.major, e.minor), e.rssi, e.t_ms)
                for e in body.events
            ]
        except MargeError:
            raise
        except ValueError as exc:
            raise InvalidScanEvent(str(exc)) from exc
        accepted, engine_events = service.ingest_scan_events(session_id, events)
        bus.publish(engine_events)
        return {"accepted": accepted, "gate_unlocked": service.gate_status(session_id)}

    @app.get("/sessions/{session_id}/events")
    def event_stream(
        session_id: str,
        authorization: str | None = Header(default=None),
        token: str | None = Query(default=None),
        max_events: int | None = Query(default=None),
        timeout_s: float | None = Query(default=None),
    ):
        # EventSource cannot set headers; accept the bearer token as a query
        # parameter as well.
        require_session_owner(session_id, authorization or (f"Bearer {token}" if token else None))
        q = bus.subscribe(session_id)

        def generate():
            sent = 0
            deadline = time.monotonic() + timeout_s if timeout_s else None
            idle_polls = 0
            try:
                while True:
                    if deadline and time.monotonic() > deadline:
                        return
                    if max_events is not None and sent >= max_events:
                        return
                    try:
                        message = q.get(timeout=0.1)
                    except queue.Empty:
                        idle_polls += 1
                        if idle_polls >= 100:  # comment heartbeat roughly every 10 s
                            idle_polls = 0
                            yield ": keepalive\n\n"
                        continue
                    idle_polls = 0
                    sent += 1
                    yield f"data: {json.dumps(message, separators=(',', ':'))}\n\n"
            finally:
                bus.unsubscribe(session_id, q)

        return StreamingResponse(generate(), media_type="text/event-stream")

    # -- users, leaderboard, eggs -----------------------------------------------

    @app.get("/leaderboard")
    def leaderboard(n: int = Query(default=10)):
        entries = service.leaderboard_top(n)
        return {
            "entries": [
                {
                    "user_id": e.user_id,
                    "total_points": e.total_points,
                    "last_award_at_ms": e.last_award_at_ms,
                }
                for e in entries
            ]
        }

    @app.get("/users/{user_id}/progress")
    def progress(
        user_id: str,
        lang: str = Query(default=None),
        authorization: str | None = Header(default=None),
    ):
        if require_user(authorization) != user_id:
            raise Forbidden("cannot read another user's progress")
        return service.user_progress(user_id, lang)

    @app.post("/users/{user_id}/language")
    def set_language(
        user_id: str, body: LanguageBody, authorization: str | None = Header(default=None)
    ):
        if require_user(authorization) != user_id:
            raise Forbidden("cannot change another user's language")
        service.set_language(user_id, body.language)
        return {"user_id": user_id, "language": body.language}

    @app.post("/users/{user_id}/feedback", status_code=201)
    def feedback(
        user_id: str, body: FeedbackBody, authorization: str | None = Header(default=None)
    ):
        if require_user(authorization) != user_id:
            raise Forbidden("cannot submit feedback for another user")
        return service.record_feedback(user_id, body.text)

    @app.post("/easter-eggs/{egg_id}/trigger")
    def trigger_egg(egg_id: str, authorization: str | None = Header(default=None)):
        user_id = require_user(authorization)
        outcome, events = service.trigger_easter_egg(user_id, egg_id)
        bus.publish(events)
        return {"outcome": outcome}

    @app.get("/health")
    def health():
        return {"ok": True, "adventures": len(catalog.adventures)}

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
