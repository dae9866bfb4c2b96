"""Chat-completion client, initialization prompt, and the correction loop.

Talks to an Ollama-style local endpoint (POST /api/chat, stream off) or
to a recorded-fixture replay backend so the whole pipeline runs
deterministically offline.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import requests

from . import language
from .language import (DEFAULT_LIBRARY, ParseFailure, ValidationFailure,
                       EmptyOutput, ValidatedMission)

DEFAULT_TIMEOUT_S = 300.0
DEFAULT_MAX_ATTEMPTS = 5

FORMAT_RULE = ("Reply with exactly one fenced code block (``` ... ```) containing "
               "only library calls, one per line, and nothing else.")


class TransportError(RuntimeError):
    pass


class ProtocolError(RuntimeError):
    pass


class ModelMissing(RuntimeError):
    pass


class ExhaustedFixture(RuntimeError):
    pass


class FixtureFormatError(ValueError):
    pass


@dataclass(frozen=True)
class EndpointConfig:
    url: str = "http://127.0.0.1:11434"
    model: str = "qwen2.5-coder"
    timeout_s: float = DEFAULT_TIMEOUT_S
    max_attempts: int = DEFAULT_MAX_ATTEMPTS


@dataclass(frozen=True)
class LlmExchange:
    messages: tuple  # (role, content) pairs sent
    response_text: str
    prompt_tokens: int
    completion_tokens: int
    latency_s: float
    model_id: str
    approximate_tokens: bool = False

    def __post_init__(self):
        if self.prompt_tokens < 0 or self.completion_tokens < 0:
            raise ValueError("token counts must be >= 0")
        if self.latency_s < 0:
            raise ValueError("latency must be >= 0")


@dataclass
class AttemptLog:
    exchanges: list = field(default_factory=list)
    prompts_used: int = 0
    final_script: Optional[ValidatedMission] = None
    termination: str = "attempts_exhausted"  # "executable" | "attempts_exhausted"

    @property
    def completion_tokens_total(self) -> int:
        return sum(e.completion_tokens for e in self.exchanges)

    @property
    def prompt_tokens_total(self) -> int:
        return sum(e.prompt_tokens for e in self.exchanges)

    @property
    def latency_total_s(self) -> float:
        return sum(e.latency_s for e in self.exchanges)


def build_init_prompt(library=DEFAULT_LIBRARY, rules: str = "",
                      home=None) -> str:
    """Deterministic system prompt exposing the whole function library."""
    lines = [
        "You control a UAV through a fixed library of mission primitives.",
        "Available primitives:",
    ]
    for spec in library:
        lines.append(f"  {spec.signature()} -- {spec.doc}")
    lines.append(FORMAT_RULE)
    if home is not None:
        lines.append(f"Home position: lat {home.lat}, lon {home.lon}, ground altitude 0 m.")
    if rules:
        lines.append(rules)
    return "\n".join(lines) + "\n"


def _messages_digest(messages) -> str:
    payload = json.dumps([[r, c] for r, c in messages], ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _approx_token_count(text: str) -> int:
    return len(text.split())


class HttpBackend:
    """Ollama-style chat endpoint (POST {url}/api/chat, non-streamed)."""

    def __init__(self, config: EndpointConfig, session=None):
        self.config = config
        self._http = session or requests.Session()

    def complete(self, messages) -> LlmExchange:
        body = {
            "model": self.config.model,
            "messages": [{"role": r, "content": c} for r, c in messages],
            "stream": False,
        }
        started = time.monotonic()
        try:
            resp = self._http.post(f"{self.config.url.rstrip('/')}/api/chat",
                                   json=body, timeout=self.config.timeout_s)
        except requests.RequestException as e:
            raise TransportError(f"chat endpoint unreachable: {e}") from e
        latency = time.monotonic() - started
        if resp.status_code == 404:
            raise ModelMissing(f"model {self.config.model!r} not found at {self.config.url}")
        if resp.status_code != 200:
            raise ProtocolError(f"endpoint returned HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            data = resp.json()
            text = data["message"]["content"]
        except (ValueError, KeyError, TypeError) as e:
            raise ProtocolError(f"malformed chat response: {e}") from e
        prompt_tokens = data.get("prompt_eval_count")
        completion_tokens = data.get("eval_count")
        approximate = prompt_tokens is None or completion_tokens is None
        if prompt_tokens is None:
            prompt_tokens = sum(_approx_token_count(c) for _, c in messages)
        if completion_tokens is None:
            completion_tokens = _approx_token_count(text)
        return LlmExchange(messages=tuple(messages), response_text=text,
                           prompt_tokens=int(prompt_tokens),
                           completion_tokens=int(completion_tokens),
                           latency_s=latency, model_id=self.config.model,
                           approximate_tokens=approximate)


class ReplayBackend:
    """Serves recorded responses in order; deterministic and offline."""

    def __init__(self, fixture_path, model_id: str = "replay"):
        self.model_id = model_id
        path = Path(fixture_path)
        try:
            records = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as e:
            raise FixtureFormatError(f"cannot read fixture {path}: {e}") from e
        if not isinstance(records, list):
            raise FixtureFormatError(f"fixture {path} must be a JSON array")
        for rec in records:
            if not isinstance(rec, dict) or "response_text" not in rec:
                raise FixtureFormatError(f"fixture {path}: record missing response_text")
        self._records = records
        self._cursor = 0

    def complete(self, messages) -> LlmExchange:
        if self._cursor >= len(self._records):
            raise ExhaustedFixture(
                f"fixture exhausted after {len(self._records)} response(s)")
        rec = self._records[self._cursor]
        self._cursor += 1
        return LlmExchange(messages=tuple(messages),
                           response_text=rec["response_text"],
                           prompt_tokens=int(rec.get("prompt_tokens", 0)),
                           completion_tokens=int(rec.get("completion_tokens", 0)),
                           latency_s=float(rec.get("latency_s", 0.0)),
                           model_id=rec.get("model_id", self.model_id))


class RecordingBackend:
    """Wraps a live backend and writes a replay fixture on close."""

    def __init__(self, inner, fixture_path):
        self.inner = inner
        self.fixture_path = Path(fixture_path)
        self._records = []

    def complete(self, messages) -> LlmExchange:
        exchange = self.inner.complete(messages)
        self._records.append({
            "request_digest": _messages_digest(messages),
            "response_text": exchange.response_text,
            "prompt_tokens": exchange.prompt_tokens,
            "completion_tokens": exchange.completion_tokens,
            "latency_s": exchange.latency_s,
            "model_id": exchange.model_id,
        })
        return exchange

    def save(self):
        self.fixture_path.write_text(
            json.dumps(self._records, indent=2) + "\n", encoding="utf-8")


class ChatSession:
    """One conversation: init prompt, goal, then corrections as needed."""

    def __init__(self, backend, library=DEFAULT_LIBRARY, home=None, rules: str = ""):
        self.backend = backend
        self.library = library
        self.init_prompt = build_init_prompt(library, rules, home)


def correction_loop(session: ChatSession, goal_prompt: str,
                    max_attempts: int = DEFAULT_MAX_ATTEMPTS) -> AttemptLog:
    """Prompt, validate, and re-prompt with the first error until executable.

    Every user-role message counts toward prompts_used, whether or not the
    final script achieves the operator's goal.
    """
    if max_attempts < 1:
        raise ValueError(f"max_attempts must be >= 1, got {max_attempts}")
    log = AttemptLog()
    messages = [("system", session.init_prompt), ("user", goal_prompt)]
    for _ in range(max_attempts):
        log.prompts_used += 1
        exchange = session.backend.complete(messages)
        log.exchanges.append(exchange)
        messages = messages + [("assistant", exchange.response_text)]
        error = None
        try:
            extracted = language.extract_script(exchange.response_text)
            script = language.parse(extracted.text)
            validated = language.validate(script, session.library)
        except EmptyOutput as e:
            error = f"empty output: {e}"
        except (ParseFailure, ValidationFailure) as e:
            error = str(e.errors[0])
        if error is None:
            log.final_script = validated
            log.termination = "executable"
            return log
        messages = messages + [("user", f"Your last reply was not executable: {error}. {FORMAT_RULE}")]
    log.termination = "attempts_exhausted"
    return log
