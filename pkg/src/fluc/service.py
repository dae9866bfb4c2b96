"""HTTP JSON + SSE surface consumed by the operator console."""

from __future__ import annotations

import json
import queue
import threading

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import StreamingResponse
from pydantic import BaseModel

from .bench import classify_outcome_label
from .orchestrator import AppConfig, MissionActive, SessionManager, UnknownSession


class PromptBody(BaseModel):
    text: str


def _session_view(session):
    state = session.vehicle.state()
    return {
        "id": session.id,
        "phase": state.phase,
        "position": {"east": state.east, "north": state.north, "up": state.up},
        "missions": len(session.history),
        "events": len(session.events),
    }


def _outcome_view(outcome):
    view = {
        "prompts_used": outcome.attempt_log.prompts_used,
        "termination": outcome.attempt_log.termination,
        "completion_tokens": outcome.attempt_log.completion_tokens_total,
        "compile_error": outcome.compile_error,
        "wall_time_s": outcome.wall_time_s,
        "classification": classify_outcome_label(outcome),
        "trace": [s.to_json_dict() for s in outcome.trace] if outcome.trace else None,
    }
    return view


def create_app(config: AppConfig = None, backend_factory=None, geocoder=None) -> FastAPI:
    config = config or AppConfig()
    app = FastAPI(title="fluc")
    manager = SessionManager()
    app.state.manager = manager

    @app.get("/v1/health")
    def health():
        return {"status": "ok"}

    @app.post("/v1/sessions", status_code=201)
    def create_session():
        backend = backend_factory() if backend_factory else None
        session = manager.create(config, backend=backend, geocoder=geocoder)
        return _session_view(session)

    def _get(session_id: int):
        try:
            return manager.get(session_id)
        except UnknownSession:
            raise HTTPException(status_code=404, detail=f"no session {session_id}")

    @app.get("/v1/sessions/{session_id}")
    def get_session(session_id: int):
        return _session_view(_get(session_id))

    @app.post("/v1/sessions/{session_id}/prompt", status_code=202)
    def post_prompt(session_id: int, body: PromptBody):
        session = _get(session_id)
        if not body.text.strip():
            raise HTTPException(status_code=400, detail="empty prompt")
        done = threading.Event()
        slot = {}

        def work():
            try:
                slot["outcome"] = session.handle_prompt(body.text)
            except MissionActive as e:
                slot["busy"] = str(e)
            except Exception as e:  # surfaced via the outcome endpoint
                slot["error"] = str(e)
            finally:
                done.set()

        # Reject busy sessions synchronously so the client gets a 409.
        if session._busy:
            raise HTTPException(status_code=409, detail="a mission is already running")
        thread = threading.Thread(target=work, daemon=True)
        thread.start()
        # In fast-sim mode missions finish quickly; wait briefly so simple
        # clients get the outcome inline, else report accepted.
        done.wait(timeout=30.0 if config.sim_speed_factor == 0 else 0.05)
        if "busy" in slot:
            raise HTTPException(status_code=409, detail=slot["busy"])
        response = {"session": session.id, "outcome_index": len(session.history)}
        if "outcome" in slot:
            response["outcome_index"] = len(session.history) - 1
            response["outcome"] = _outcome_view(slot["outcome"])
        elif "error" in slot:
            raise HTTPException(status_code=500, detail=slot["error"])
        else:
            response["status"] = "running"
        return response

    @app.get("/v1/sessions/{session_id}/outcomes/{index}")
    def get_outcome(session_id: int, index: int):
        session = _get(session_id)
        if not (0 <= index < len(session.history)):
            raise HTTPException(status_code=404, detail=f"no outcome {index}")
        return _outcome_view(session.history[index])

    @app.get("/v1/sessions/{session_id}/events")
    def events(session_id: int, request: Request, follow: bool = True):
        session = _get(session_id)

        def stream():
            q = session.subscribe()
            try:
                # Replay history first so late subscribers reconstruct the
                # view; seq numbers dedupe the handover to the live queue.
                snapshot = list(session.events)
                for event in snapshot:
                    yield _sse(event)
                seen = len(snapshot)
                while follow:
                    try:
                        event = q.get(timeout=1.0)
                    except queue.Empty:
                        yield ": keepalive\n\n"
                        continue
                    if event["seq"] < seen:
                        continue
                    seen = event["seq"] + 1
                    yield _sse(event)
            finally:
                session.unsubscribe(q)

        return StreamingResponse(stream(), media_type="text/event-stream")

    return app


def _sse(event) -> str:
    return (f"id: {event['seq']}\nevent: {event['type']}\n"
            f"data: {json.dumps(event['payload'])}\n\n")


def serve(config: AppConfig = None, host: str = "127.0.0.1", port: int = 8000,
          backend_factory=None):
    import uvicorn

    app = create_app(config, backend_factory=backend_factory)
    uvicorn.run(app, host=host, port=port)
