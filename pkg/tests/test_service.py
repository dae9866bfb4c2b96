import json
import threading
import time

import pytest
from fastapi.testclient import TestClient

from fluc.llm import ReplayBackend
from fluc.orchestrator import AppConfig
from fluc.service import create_app
from tests.conftest import TRANSCRIPTS


@pytest.fixture
def client():
    app = create_app(AppConfig(),
                     backend_factory=lambda: ReplayBackend(TRANSCRIPTS / "scenario1.json"))
    with TestClient(app) as c:
        yield c


def test_health(client):
    assert client.get("/v1/health").json() == {"status": "ok"}


def test_create_and_get_session(client):
    created = client.post("/v1/sessions")
    assert created.status_code == 201
    sid = created.json()["id"]
    got = client.get(f"/v1/sessions/{sid}")
    assert got.status_code == 200
    assert got.json()["phase"] == "Disarmed"


def test_get_unknown_session_404(client):
    assert client.get("/v1/sessions/12345").status_code == 404


def test_prompt_flow(client):
    sid = client.post("/v1/sessions").json()["id"]
    resp = client.post(f"/v1/sessions/{sid}/prompt",
                       json={"text": "Go to 41.1783107 -8.591609 17"})
    assert resp.status_code == 202
    body = resp.json()
    assert body["outcome"]["prompts_used"] == 1
    assert body["outcome"]["classification"] == "Successful"
    assert body["outcome"]["trace"][-1]["phase"] == "EnRoute"


def test_outcome_endpoint_matches_inline(client):
    sid = client.post("/v1/sessions").json()["id"]
    inline = client.post(f"/v1/sessions/{sid}/prompt",
                         json={"text": "Go to 41.1783107 -8.591609 17"}).json()
    fetched = client.get(f"/v1/sessions/{sid}/outcomes/{inline['outcome_index']}")
    assert fetched.status_code == 200
    assert fetched.json() == inline["outcome"]


def test_malformed_body_400(client):
    sid = client.post("/v1/sessions").json()["id"]
    assert client.post(f"/v1/sessions/{sid}/prompt", json={"nope": 1}).status_code == 422
    assert client.post(f"/v1/sessions/{sid}/prompt", json={"text": "  "}).status_code == 400


def test_busy_session_409():
    app = create_app(AppConfig(),
                     backend_factory=lambda: ReplayBackend(TRANSCRIPTS / "scenario1.json"))
    with TestClient(app) as client:
        sid = client.post("/v1/sessions").json()["id"]
        session = app.state.manager.get(sid)
        session._busy = True
        resp = client.post(f"/v1/sessions/{sid}/prompt", json={"text": "go"})
        session._busy = False
        assert resp.status_code == 409


def test_sse_stream_replays_mission_events(client):
    sid = client.post("/v1/sessions").json()["id"]
    client.post(f"/v1/sessions/{sid}/prompt",
                json={"text": "Go to 41.1783107 -8.591609 17"})
    events = []
    with client.stream("GET", f"/v1/sessions/{sid}/events?follow=false") as resp:
        assert resp.status_code == 200
        current = {}
        for line in resp.iter_lines():
            if line.startswith("event:"):
                current["type"] = line.split(":", 1)[1].strip()
            elif line.startswith("data:"):
                current["data"] = json.loads(line.split(":", 1)[1])
            elif line == "" and current:
                events.append(current)
                current = {}
                if events[-1]["type"] == "outcome":
                    break
    kinds = [e["type"] for e in events]
    assert "attempt" in kinds
    assert "compile" in kinds
    assert kinds.count("telemetry") >= 2
    assert kinds[-1] == "outcome"
    assert events[-1]["data"]["status"] == "done"


def test_telemetry_events_at_least_one_per_sim_second(client):
    sid = client.post("/v1/sessions").json()["id"]
    client.post(f"/v1/sessions/{sid}/prompt",
                json={"text": "Go to 41.1783107 -8.591609 17"})
    session = client.app.state.manager.get(sid)
    telemetry = [e for e in session.events if e["type"] == "telemetry"]
    duration = telemetry[-1]["payload"]["t"] - telemetry[0]["payload"]["t"]
    assert len(telemetry) >= duration  # 1 Hz sampling
