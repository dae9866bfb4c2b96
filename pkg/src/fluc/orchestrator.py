"""End-to-end mission handling: prompt -> script -> mission items -> flight.

Pipeline failures are data, not exceptions: every handled prompt yields a
complete :class:`MissionOutcome` so the bench harness can classify failed
runs the same way as successful ones.
"""

from __future__ import annotations

import itertools
import threading
import time
from dataclasses import dataclass, field
from typing import Optional

from . import language, llm, sim
from .geodesy import GeoPoint
from .geolocation import Geocoder
from .llm import AttemptLog, ChatSession, EndpointConfig, correction_loop
from .sim import (Arm, CompileDeps, CompileError, SimTimeout, StartMission,
                  UploadMission, Vehicle, compile_mission, run_until)

DEFAULT_SIM_TIMEOUT_S = 600.0


class UnknownSession(KeyError):
    pass


class MissionActive(RuntimeError):
    """A prompt arrived while the session's vehicle was still mid-mission."""


@dataclass
class AppConfig:
    endpoint: EndpointConfig = field(default_factory=EndpointConfig)
    home: GeoPoint = field(default_factory=lambda: GeoPoint(41.1780, -8.5960, 0.0))
    max_attempts: int = llm.DEFAULT_MAX_ATTEMPTS
    sim_speed_factor: float = 0.0  # 0 = as fast as possible
    sim_timeout_s: float = DEFAULT_SIM_TIMEOUT_S
    offline_geocoding: bool = True


@dataclass
class MissionOutcome:
    attempt_log: AttemptLog
    items: Optional[list] = None
    compile_error: Optional[str] = None
    trace: Optional[list] = None
    wall_time_s: float = 0.0

    @property
    def succeeded_pipeline(self) -> bool:
        return self.trace is not None


class Session:
    def __init__(self, session_id: int, config: AppConfig, backend=None,
                 geocoder: Optional[Geocoder] = None):
        self.id = session_id
        self.config = config
        self.backend = backend
        self.geocoder = geocoder or Geocoder(offline=config.offline_geocoding)
        self.vehicle = Vehicle(home=config.home)
        self.history: list = []  # MissionOutcome per handled prompt
        self.events: list = []  # append-only
        self._busy = False
        self._lock = threading.Lock()
        self._subscribers: list = []

    # -- events ------------------------------------------------------------

    def _emit(self, event_type: str, payload: dict):
        event = {"type": event_type, "seq": len(self.events), "payload": payload}
        self.events.append(event)
        for queue in list(self._subscribers):
            queue.put(event)

    def subscribe(self):
        import queue as queue_mod
        q = queue_mod.Queue()
        self._subscribers.append(q)
        return q

    def unsubscribe(self, q):
        if q in self._subscribers:
            self._subscribers.remove(q)

    # -- pipeline ----------------------------------------------------------

    def _make_chat(self) -> ChatSession:
        backend = self.backend or llm.HttpBackend(self.config.endpoint)
        return ChatSession(backend, home=self.config.home)

    def handle_prompt(self, text: str) -> MissionOutcome:
        with self._lock:
            if self._busy:
                raise MissionActive("a mission is already running in this session")
            self._busy = True
        try:
            return self._handle(text)
        finally:
            self._busy = False

    def _handle(self, text: str) -> MissionOutcome:
        started = time.monotonic()
        chat = self._make_chat()
        log = correction_loop(chat, text, self.config.max_attempts)
        for i, exchange in enumerate(log.exchanges, start=1):
            self._emit("attempt", {
                "attempt": i,
                "completion_tokens": exchange.completion_tokens,
                "latency_s": exchange.latency_s,
                "valid": i == len(log.exchanges) and log.termination == "executable",
            })
        outcome = MissionOutcome(attempt_log=log)
        if log.final_script is None:
            self._emit("outcome", {"status": "failed", "reason": "attempts exhausted"})
            outcome.wall_time_s = time.monotonic() - started
            self.history.append(outcome)
            return outcome

        deps = CompileDeps(resolve_place=lambda name: self.geocoder.resolve_place(name).point)
        try:
            items = compile_mission(log.final_script, self.config.home, deps)
        except CompileError as e:
            outcome.compile_error = str(e)
            self._emit("compile", {"status": "failed", "error": str(e)})
            self._emit("outcome", {"status": "failed", "reason": "compile error"})
            outcome.wall_time_s = time.monotonic() - started
            self.history.append(outcome)
            return outcome
        outcome.items = items
        self._emit("compile", {"status": "ok", "items": len(items)})

        vehicle = Vehicle(home=self.config.home)
        self.vehicle = vehicle
        for cmd, label in ((UploadMission(tuple(items)), "upload"),
                           (Arm(), "arm"), (StartMission(), "start")):
            ack = vehicle.command(cmd)
            if not ack.ok:
                outcome.compile_error = f"{label} rejected: {ack.reason}"
                self._emit("outcome", {"status": "failed", "reason": outcome.compile_error})
                outcome.wall_time_s = time.monotonic() - started
                self.history.append(outcome)
                return outcome
            self._emit("state", {"command": label, "phase": vehicle.phase.value})

        speed = self.config.sim_speed_factor

        def on_sample(sample):
            self._emit("telemetry", sample.to_json_dict())
            if speed > 0:
                time.sleep(sim.TRACE_SAMPLE_PERIOD / speed)

        try:
            trace = run_until(vehicle,
                              lambda v: v.mission_complete or v.phase is sim.Phase.LANDED,
                              self.config.sim_timeout_s, on_sample=on_sample)
            outcome.trace = trace
            self._emit("outcome", {"status": "done",
                                   "final": trace[-1].to_json_dict(),
                                   "prompts_used": log.prompts_used})
        except SimTimeout as e:
            outcome.trace = None
            self._emit("outcome", {"status": "failed", "reason": "sim timeout",
                                   "partial_samples": len(e.trace)})
        outcome.wall_time_s = time.monotonic() - started
        self.history.append(outcome)
        return outcome


class SessionManager:
    def __init__(self):
        self._sessions = {}
        self._ids = itertools.count(1)
        self._lock = threading.Lock()

    def create(self, config: AppConfig, backend=None, geocoder=None) -> Session:
        with self._lock:
            session_id = next(self._ids)
            session = Session(session_id, config, backend=backend, geocoder=geocoder)
            self._sessions[session_id] = session
            return session

    def get(self, session_id: int) -> Session:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise UnknownSession(f"no session {session_id}") from None

    def list(self):
        return list(self._sessions.values())


# ---------------------------------------------------------------------------
# Interactive terminal loop
# ---------------------------------------------------------------------------

def repl(config: AppConfig, backend=None, input_fn=input, print_fn=print):
    """Line-oriented operator loop; survives every per-prompt failure."""
    from .bench import classify_outcome_label

    manager = SessionManager()
    session = manager.create(config, backend=backend)
    print_fn("fluc mission console -- :status :trace :model <id> :quit")
    while True:
        try:
            line = input_fn("> ")
        except EOFError:
            return
        line = line.strip()
        if not line:
            continue
        if line == ":quit":
            return
        if line == ":status":
            s = session.vehicle.state()
            print_fn(f"phase {s.phase} at ({s.east:.1f}, {s.north:.1f}, {s.up:.1f})")
            continue
        if line == ":trace":
            if session.history and session.history[-1].trace:
                for sample in session.history[-1].trace:
                    print_fn(f"t={sample.t:7.1f}  ({sample.east:8.1f}, {sample.north:8.1f}, {sample.up:6.1f})  {sample.phase}")
            else:
                print_fn("no trace yet")
            continue
        if line.startswith(":model "):
            model = line.split(None, 1)[1]
            session.config.endpoint = EndpointConfig(
                url=config.endpoint.url, model=model,
                timeout_s=config.endpoint.timeout_s,
                max_attempts=config.endpoint.max_attempts)
            print_fn(f"model set to {model}")
            continue
        if line.startswith(":"):
            print_fn(f"unknown command {line}")
            continue
        try:
            outcome = session.handle_prompt(line)
        except MissionActive as e:
            print_fn(f"rejected: {e}")
            continue
        print_fn(f"prompts used: {outcome.attempt_log.prompts_used}")
        print_fn(f"classification: {classify_outcome_label(outcome)}")
        if outcome.trace:
            final = outcome.trace[-1]
            print_fn(f"final position: ({final.east:.1f}, {final.north:.1f}, {final.up:.1f}) {final.phase}")
        elif outcome.compile_error:
            print_fn(f"compile failed: {outcome.compile_error}")
        else:
            print_fn("no executable script obtained")
