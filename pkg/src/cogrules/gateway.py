"""Chat-completion gateway: one `complete` entry point over HTTP
(OpenAI-style /v1/chat/completions), deterministic JSONL replay, and
in-process scripted backends, plus seeded sampling over a heterogeneous
critic ensemble.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import requests


@dataclass(frozen=True)
class ChatMessage:
    role: str  # system | user | assistant
    content: str

    def __post_init__(self):
        if self.role not in ("system", "user", "assistant"):
            raise ValueError(f"bad role {self.role!r}")
        if self.role in ("user", "assistant") and not self.content:
            raise ValueError("user/assistant content must be nonempty")


ScriptFn = Callable[[list[ChatMessage]], str]

# scripted backends referencable by name from JSON configs
SCRIPT_REGISTRY: dict[str, ScriptFn] = {}


def register_script(name: str, fn: ScriptFn) -> None:
    SCRIPT_REGISTRY[name] = fn


@dataclass(frozen=True)
class BackendSpec:
    kind: str  # http | replay | scripted
    endpoint: str = ""
    model: str = ""
    temperature: float = 0.0
    timeout_ms: int = 30_000
    retries: int = 2
    transcript_path: str = ""
    script: str = ""  # SCRIPT_REGISTRY key for scripted backends
    record_path: str = ""  # when set, append replayable records here

    def __post_init__(self):
        if self.kind not in ("http", "replay", "scripted"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.kind == "http" and not (self.endpoint and self.model):
            raise ValueError("http backend requires endpoint and model")
        if self.kind == "replay" and not self.transcript_path:
            raise ValueError("replay backend requires a transcript path")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


class TransportError(RuntimeError):
    pass


class ReplayMiss(RuntimeError):
    pass


class ProtocolError(RuntimeError):
    pass


def request_hash(model: str, messages: list[ChatMessage]) -> str:
    payload = json.dumps(
        {"model": model, "messages": [{"role": m.role, "content": m.content} for m in messages]},
        sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()


class Backend:
    def complete(self, messages: list[ChatMessage]) -> ChatMessage:
        raise NotImplementedError


class HttpBackend(Backend):
    def __init__(self, spec: BackendSpec):
        self.spec = spec

    def complete(self, messages: list[ChatMessage]) -> ChatMessage:
        body = {
            "model": self.spec.model,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
            "temperature": self.spec.temperature,
        }
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get("COGRULES_API_KEY")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        last_err: Exception | None = None
        for _ in range(self.spec.retries + 1):
            try:
                resp = requests.post(self.spec.endpoint, json=body, headers=headers,
                                     timeout=self.spec.timeout_ms / 1000.0)
            except requests.RequestException as e:
                last_err = e
                continue
            if resp.status_code >= 500:
                last_err = TransportError(f"server error {resp.status_code}")
                continue
            if resp.status_code != 200:
                raise ProtocolError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                content = resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as e:
                raise ProtocolError(f"malformed completion body: {e}") from e
            return ChatMessage("assistant", content)
        raise TransportError(f"giving up after {self.spec.retries + 1} attempts: {last_err}")


class ReplayBackend(Backend):
    """Serves recorded responses keyed by request hash, in recorded order
    for repeated identical requests. Misses fail loudly."""

    def __init__(self, spec: BackendSpec):
        self.spec = spec
        self._lock = threading.Lock()
        self._queues: dict[str, list[str]] = {}
        path = Path(spec.transcript_path)
        for line in path.read_text().splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            self._queues.setdefault(rec["request_hash"], []).append(rec["response"])

    def complete(self, messages: list[ChatMessage]) -> ChatMessage:
        h = request_hash(self.spec.model, messages)
        with self._lock:
            queue = self._queues.get(h)
            if not queue:
                preview = messages[-1].content[:120]
                raise ReplayMiss(f"no recorded response for hash {h[:12]} ({preview!r})")
            return ChatMessage("assistant", queue.pop(0))


class ScriptedBackend(Backend):
    def __init__(self, spec: BackendSpec, fn: ScriptFn | None = None):
        self.spec = spec
        if fn is None:
            if spec.script not in SCRIPT_REGISTRY:
                raise ValueError(f"unregistered script {spec.script!r}")
            fn = SCRIPT_REGISTRY[spec.script]
        self.fn = fn

    def complete(self, messages: list[ChatMessage]) -> ChatMessage:
        return ChatMessage("assistant", self.fn(messages))


class RecordingBackend(Backend):
    """Wraps another backend, appending (hash, request, response) JSONL
    records suitable for later replay."""

    def __init__(self, inner: Backend, model: str, path: str | Path):
        self.inner = inner
        self.model = model
        self.path = Path(path)
        self._lock = threading.Lock()

    def complete(self, messages: list[ChatMessage]) -> ChatMessage:
        reply = self.inner.complete(messages)
        rec = {
            "request_hash": request_hash(self.model, messages),
            "request": [{"role": m.role, "content": m.content} for m in messages],
            "response": reply.content,
        }
        with self._lock, self.path.open("a") as fh:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
        return reply


def make_backend(spec: BackendSpec) -> Backend:
    backend: Backend
    if spec.kind == "http":
        backend = HttpBackend(spec)
    elif spec.kind == "replay":
        backend = ReplayBackend(spec)
    else:
        backend = ScriptedBackend(spec)
    if spec.record_path:
        backend = RecordingBackend(backend, spec.model, spec.record_path)
    return backend


def complete(backend: BackendSpec | Backend, messages: list[ChatMessage]) -> ChatMessage:
    if not messages:
        raise ValueError("messages must be nonempty")
    if isinstance(backend, BackendSpec):
        backend = make_backend(backend)
    return backend.complete(messages)


@dataclass
class CriticEnsembleSpec:
    members: list[tuple[BackendSpec, float]]
    seed: int = 0

    def __post_init__(self):
        total = sum(p for _, p in self.members)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"selection probabilities sum to {total}, expected 1")


class CriticSampler:
    """Seeded per-call backend selection over a heterogeneous ensemble."""

    def __init__(self, ensemble: CriticEnsembleSpec):
        self.ensemble = ensemble
        self.rng = random.Random(ensemble.seed)
        self._backends = [(make_backend(spec), p) for spec, p in ensemble.members]

    def sample(self) -> Backend:
        x = self.rng.random()
        acc = 0.0
        for backend, p in self._backends:
            acc += p
            if x < acc:
                return backend
        return self._backends[-1][0]

    def sample_spec(self) -> BackendSpec:
        x = self.rng.random()
        acc = 0.0
        for (spec, p) in self.ensemble.members:
            acc += p
            if x < acc:
                return spec
        return self.ensemble.members[-1][0]


def sample_critic_backend(sampler: CriticSampler) -> Backend:
    return sampler.sample()
