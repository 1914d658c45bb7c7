"""Chat-completion backends behind one retrying gateway.

Three kinds of backend ship here: :class:`HttpBackend` talks to a hosted
chat-completions endpoint, :class:`ReplayBackend` answers from a store of recorded
responses keyed by prompt digest, and :class:`FlakyBackend` injects transient
failures in front of another backend for testing retry behaviour.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Protocol, Sequence

import httpx

log = logging.getLogger(__name__)

ROLES = ("system", "user", "assistant")
API_KEY_ENV = "URBANLLM_API_KEY"
API_BASE_ENV = "URBANLLM_API_BASE"


class GatewayError(Exception):
    pass


class TransientError(GatewayError):
    """Retryable failure: transport error or 5xx response."""


class BackendUnavailable(GatewayError):
    pass


class AuthError(GatewayError):
    pass


class BadRequest(GatewayError):
    """Non-retryable 4xx response other than an auth failure."""


class ReplayMiss(GatewayError):
    def __init__(self, digest: str):
        super().__init__(f"no recorded response for prompt digest {digest[:12]}")
        self.digest = digest


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple[tuple[str, str], ...]
    temperature: float = 0.0
    max_output_tokens: int = 2048
    backend_name: str = "replay"

    def __post_init__(self):
        object.__setattr__(self, "messages", tuple((r, c) for r, c in self.messages))
        for role, _ in self.messages:
            if role not in ROLES:
                raise ValueError(f"unknown role {role!r}")
        if not any(role == "user" for role, _ in self.messages):
            raise ValueError("a chat request needs at least one user message")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")

    @classmethod
    def user(cls, prompt: str, **kwargs) -> "ChatRequest":
        return cls((("user", prompt),), **kwargs)


@dataclass(frozen=True)
class ChatResponse:
    content: str
    backend_name: str
    latency_ms: float
    attempt_count: int
    delays: tuple[float, ...] = ()


def render_messages(messages: Sequence[tuple[str, str]]) -> str:
    if len(messages) == 1 and messages[0][0] == "user":
        return messages[0][1]
    return "".join(f"<|{role}|>\n{content}\n" for role, content in messages)


def prompt_digest(prompt: str | Sequence[tuple[str, str]]) -> str:
    """SHA-256 of the rendered prompt; a bare string counts as one user message."""
    text = prompt if isinstance(prompt, str) else render_messages(prompt)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class Backend(Protocol):
    name: str

    def send(self, request: ChatRequest) -> str: ...


class ReplayStore:
    """Recorded responses, persisted as JSONL rows of ``{digest, content}``."""

    def __init__(self, entries: dict[str, str] | None = None):
        self._entries = dict(entries or {})
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, digest: str) -> bool:
        return digest in self._entries

    def add(self, prompt: str | Sequence[tuple[str, str]], content: str) -> str:
        digest = prompt_digest(prompt)
        with self._lock:
            self._entries[digest] = content
        return digest

    def get(self, digest: str) -> str:
        try:
            return self._entries[digest]
        except KeyError:
            raise ReplayMiss(digest) from None

    def update(self, other: "ReplayStore") -> None:
        self._entries.update(other._entries)

    @classmethod
    def load(cls, path: str | Path) -> "ReplayStore":
        entries = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                row = json.loads(line)
                entries[row["digest"]] = row["content"]
        return cls(entries)

    def dumps(self) -> str:
        return "".join(
            json.dumps({"digest": d, "content": c}, ensure_ascii=False) + "\n"
            for d, c in sorted(self._entries.items())
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")


class ReplayBackend:
    def __init__(self, store: ReplayStore, name: str = "replay"):
        self.store = store
        self.name = name

    def send(self, request: ChatRequest) -> str:
        return self.store.get(prompt_digest(request.messages))


class RecordingBackend:
    """Pass calls through to ``inner`` and remember every answer in ``store``."""

    def __init__(self, inner: Backend, store: ReplayStore, name: str | None = None):
        self.inner = inner
        self.store = store
        self.name = name or inner.name

    def send(self, request: ChatRequest) -> str:
        content = self.inner.send(request)
        self.store.add(request.messages, content)
        return content


class FlakyBackend:
    """Raise ``error`` for the first ``failures`` calls, then defer to ``inner``."""

    def __init__(self, inner: Backend, failures: int, error: Callable[[], Exception] = None, name=None):
        self.inner = inner
        self.remaining = failures
        self.error = error or (lambda: TransientError("injected failure"))
        self.name = name or inner.name
        self.calls = 0
        self._lock = threading.Lock()

    def send(self, request: ChatRequest) -> str:
        with self._lock:
            self.calls += 1
            fail = self.remaining > 0
            if fail:
                self.remaining -= 1
        if fail:
            raise self.error()
        return self.inner.send(request)


class HttpBackend:
    """Hosted chat-completions endpoint (``POST {base}/chat/completions``)."""

    def __init__(
        self,
        base_url: str,
        api_key: str | None,
        model: str = "default",
        name: str = "http",
        timeout: float = 60.0,
        max_inflight: int = 4,
        transport: httpx.BaseTransport | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.model = model
        self.name = name
        self._slots = threading.BoundedSemaphore(max_inflight)
        self._client = httpx.Client(timeout=timeout, transport=transport)

    @classmethod
    def from_env(cls, **kwargs) -> "HttpBackend":
        base = os.environ.get(API_BASE_ENV)
        if not base:
            raise BackendUnavailable(f"{API_BASE_ENV} is not set")
        return cls(base, os.environ.get(API_KEY_ENV), **kwargs)

    def body(self, request: ChatRequest) -> dict:
        return {
            "model": self.model,
            "messages": [{"role": r, "content": c} for r, c in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }

    def send(self, request: ChatRequest) -> str:
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        with self._slots:
            try:
                resp = self._client.post(
                    f"{self.base_url}/chat/completions", json=self.body(request), headers=headers
                )
            except httpx.TransportError as exc:
                raise TransientError(f"transport error: {exc}") from exc
        if resp.status_code in (401, 403):
            raise AuthError(f"credential rejected ({resp.status_code})")
        if resp.status_code >= 500:
            raise TransientError(f"server error {resp.status_code}")
        if resp.status_code >= 400:
            raise BadRequest(f"request rejected ({resp.status_code}): {resp.text[:200]}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BadRequest(f"unexpected response body: {resp.text[:200]}") from exc

    def close(self) -> None:
        self._client.close()


@dataclass
class Gateway:
    backends: dict[str, Backend] = field(default_factory=dict)
    max_retries: int = 3
    base_delay: float = 0.5
    factor: float = 2.0
    sleep: Callable[[float], None] = time.sleep

    def register(self, backend: Backend, name: str | None = None) -> "Gateway":
        self.backends[name or backend.name] = backend
        return self

    def backoff_schedule(self) -> list[float]:
        return [self.base_delay * self.factor**k for k in range(self.max_retries)]

    def complete(self, request: ChatRequest) -> ChatResponse:
        try:
            backend = self.backends[request.backend_name]
        except KeyError:
            raise BackendUnavailable(f"no backend registered as {request.backend_name!r}") from None
        schedule = self.backoff_schedule()
        delays: list[float] = []
        started = time.perf_counter()
        attempt = 0
        while True:
            attempt += 1
            try:
                content = backend.send(request)
            except TransientError as exc:
                if attempt > self.max_retries:
                    raise BackendUnavailable(
                        f"{request.backend_name}: gave up after {attempt} attempts ({exc})"
                    ) from exc
                delay = schedule[attempt - 1]
                log.warning("%s attempt %d failed (%s); retrying in %.2fs", backend.name, attempt, exc, delay)
                delays.append(delay)
                self.sleep(delay)
                continue
            return ChatResponse(
                content=content,
                backend_name=request.backend_name,
                latency_ms=(time.perf_counter() - started) * 1000.0,
                attempt_count=attempt,
                delays=tuple(delays),
            )

    def ask(self, prompt: str, backend: str, temperature: float = 0.0) -> ChatResponse:
        return self.complete(ChatRequest.user(prompt, temperature=temperature, backend_name=backend))


def replay_gateway(stores: Iterable[ReplayStore] | ReplayStore, name: str = "replay") -> Gateway:
    if isinstance(stores, ReplayStore):
        store = stores
    else:
        store = ReplayStore()
        for s in stores:
            store.update(s)
    return Gateway().register(ReplayBackend(store, name))
