"""HTTP consultation service.

JSON API over the shared session engine:

    POST /api/sessions                start a session from self-reports
    POST /api/sessions/{id}/answer    answer the pending inquiry
    GET  /api/sessions/{id}           full session view with history
    GET  /api/findings                finding catalog (id, name, kind)
    GET  /api/health                  liveness and model status

Errors are JSON bodies {code, message}.  Sessions live in memory, expire
after an idle timeout, and are mutated under a per-session lock; the engine
(checkpoint snapshot) is immutable, so swapping in a new engine only affects
sessions created afterwards.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .session import Answer, ConsultEngine, Session, SessionStatus

DEFAULT_SESSION_TIMEOUT_S = 30 * 60
TOP_K = 5


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message
        super().__init__(message)


@dataclass
class _Stored:
    session: Session
    engine: ConsultEngine
    lock: threading.Lock


class SessionStore:
    def __init__(self, timeout_s: float = DEFAULT_SESSION_TIMEOUT_S):
        self.timeout_s = timeout_s
        self._sessions: dict[str, _Stored] = {}
        self._lock = threading.Lock()

    def _prune(self) -> None:
        now = time.time()
        stale = [sid for sid, st in self._sessions.items() if now - st.session.updated_at > self.timeout_s]
        for sid in stale:
            del self._sessions[sid]

    def add(self, session: Session, engine: ConsultEngine) -> None:
        with self._lock:
            self._prune()
            self._sessions[session.session_id] = _Stored(session, engine, threading.Lock())

    def get(self, session_id: str) -> _Stored:
        with self._lock:
            self._prune()
            stored = self._sessions.get(session_id)
        if stored is None:
            raise ApiError(404, "unknown_session", f"no session {session_id}")
        return stored


def _distribution_summary(engine: ConsultEngine, probs: np.ndarray) -> dict:
    order = np.argsort(-probs)[:TOP_K]
    return {
        "top": [
            {"disease_id": int(d), "name": engine.kb.disease_name(int(d)), "prob": float(probs[d])}
            for d in order
        ],
        "probs": [float(p) for p in probs],
    }


def _finding_obj(engine: ConsultEngine, fid: int) -> dict:
    f = engine.kb.findings[fid]
    return {"id": f.id, "name": f.name, "kind": f.kind.value}


def _diagnosis_obj(engine: ConsultEngine, session: Session) -> dict:
    return {
        "disease_id": session.diagnosis,
        "name": engine.kb.disease_name(session.diagnosis),
        "entropy": session.entropy,
        "turn": session.turn,
    }


def _step_response(engine: ConsultEngine, session: Session) -> dict:
    top = int(np.argmax(session.probs))
    body = {
        "session_id": session.session_id,
        "turn": session.turn,
        "max_turns": engine.max_turns,
        "entropy": session.entropy,
        "threshold_of_top_disease": engine.threshold_of(top),
        "distribution_summary": _distribution_summary(engine, session.probs),
        "stopped": session.status is SessionStatus.DIAGNOSED,
        "status": session.status.value,
    }
    if session.status is SessionStatus.DIAGNOSED:
        body["diagnosis"] = _diagnosis_obj(engine, session)
    else:
        body["next_inquiry"] = _finding_obj(engine, session.pending_inquiry)
    return body


def _session_view(engine: ConsultEngine, session: Session) -> dict:
    view = _step_response(engine, session)
    view["self_reports"] = [_finding_obj(engine, fid) for fid in session.self_reports]
    view["initial_entropy"] = session.initial_entropy
    view["history"] = [
        {
            "turn": row.turn,
            "finding": _finding_obj(engine, row.finding_id),
            "answer": row.answer.value,
            "entropy_after": row.entropy_after,
        }
        for row in session.history
    ]
    if session.status is not SessionStatus.DIAGNOSED:
        view["first_inquiry" if session.turn == 0 else "pending_inquiry"] = _finding_obj(
            engine, session.pending_inquiry
        )
    return view


def create_app(
    engine: ConsultEngine | None,
    static_dir: str | None = None,
    session_timeout_s: float = DEFAULT_SESSION_TIMEOUT_S,
) -> FastAPI:
    app = FastAPI(title="dxagent consultation service")
    store = SessionStore(timeout_s=session_timeout_s)
    app.state.engine = engine
    app.state.store = store

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"code": exc.code, "message": exc.message})

    def _engine() -> ConsultEngine:
        if app.state.engine is None:
            raise ApiError(503, "no_model", "no checkpoint is loaded")
        return app.state.engine

    @app.get("/api/health")
    def health():
        eng = app.state.engine
        return {
            "status": "ok",
            "model_loaded": eng is not None,
            "kb_hash": eng.kb_hash if eng is not None else None,
        }

    @app.get("/api/findings")
    def findings():
        eng = _engine()
        return [_finding_obj(eng, f.id) for f in eng.kb.findings]

    @app.post("/api/sessions")
    def create_session(body: dict):
        eng = _engine()
        reports = body.get("self_reports")
        if not isinstance(reports, list) or not reports or not all(isinstance(x, int) for x in reports):
            raise ApiError(400, "bad_self_reports", "self_reports must be a nonempty list of finding ids")
        context_bits = None
        if body.get("context") is not None:
            ctx = body["context"]
            try:
                sex = int(ctx["sex"])
                age = int(ctx["age_range"])
            except (KeyError, TypeError, ValueError):
                raise ApiError(400, "bad_context", "context must carry integer sex and age_range")
            if not eng.kb.has_context:
                raise ApiError(400, "bad_context", "this KB carries no demographic context")
            if not (0 <= age < len(eng.kb.age_ranges)) or sex not in (0, 1):
                raise ApiError(400, "bad_context", "sex must be 0/1 and age_range a valid index")
            context_bits = np.zeros(eng.kb.context_dim)
            context_bits[0] = sex
            context_bits[1 + age] = 1.0
        try:
            session = eng.start_session(reports, context_bits)
        except ValueError as exc:
            raise ApiError(400, "bad_request", str(exc))
        store.add(session, eng)
        response = _step_response(eng, session)
        if "next_inquiry" in response:
            response["first_inquiry"] = response.pop("next_inquiry")
        return response

    @app.post("/api/sessions/{session_id}/answer")
    def submit_answer(session_id: str, body: dict):
        stored = store.get(session_id)
        raw = body.get("answer")
        try:
            answer = Answer(raw)
        except ValueError:
            raise ApiError(400, "bad_answer", f"answer must be one of {[a.value for a in Answer]}")
        with stored.lock:
            session = stored.session
            if session.status is SessionStatus.DIAGNOSED:
                raise ApiError(410, "session_diagnosed", "session already reached a diagnosis")
            if session.status is not SessionStatus.AWAITING_ANSWER:
                raise ApiError(409, "not_awaiting_answer", f"session status is {session.status.value}")
            stored.engine.submit_answer(session, answer)
            return _step_response(stored.engine, session)

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        stored = store.get(session_id)
        with stored.lock:
            return _session_view(stored.engine, stored.session)

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
