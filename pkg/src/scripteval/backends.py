"""Chat backends: an OpenAI-compatible HTTP client and deterministic mocks."""
from __future__ import annotations

import hashlib
import json
import os
import random
import re
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol

import httpx

# synthetic status codes for failures that never produced an HTTP response
STATUS_CLIENT_TIMEOUT = -1
STATUS_TRANSPORT = -2


class BackendError(Exception):
    def __init__(self, status: int, message: str = ""):
        super().__init__(f"backend status {status}: {message}" if message else f"backend status {status}")
        self.status = status


class BackendTimeout(BackendError):
    pass


class BackendModeration(BackendError):
    pass


TIMEOUT_STATUSES = frozenset({STATUS_CLIENT_TIMEOUT, 408, 504, 524})
MODERATION_STATUSES = frozenset({400})


def error_for_status(status: int, message: str = "") -> BackendError:
    if status in TIMEOUT_STATUSES:
        return BackendTimeout(status, message)
    if status in MODERATION_STATUSES:
        return BackendModeration(status, message)
    return BackendError(status, message)


@dataclass
class ChatRequest:
    messages: list
    temperature: float = 0.7
    max_tokens: Optional[int] = None
    # bookkeeping, not sent over the wire
    context: str = ""
    tag: str = ""
    min_chars: int = 0
    max_chars: int = 0


@dataclass
class ChatResponse:
    text: str
    status: int = 200


class ChatBackend(Protocol):
    name: str

    def complete(self, request: ChatRequest) -> ChatResponse:
        """Return the reply or raise :class:`BackendError`."""
        ...


class RateLimiter:
    """Minimum spacing between calls, shared across threads."""

    def __init__(self, per_second: Optional[float]):
        self.interval = 1.0 / per_second if per_second else 0.0
        self._lock = threading.Lock()
        self._next = 0.0

    def wait(self):
        if not self.interval:
            return
        with self._lock:
            now = time.monotonic()
            delay = self._next - now
            self._next = max(now, self._next) + self.interval
        if delay > 0:
            time.sleep(delay)


class HttpChatBackend:
    """Chat-completions JSON API over HTTPS.

    The API key is read from the environment variable ``api_key_env``; the
    reply text is taken from ``choices[0].message.content``.
    """

    def __init__(
        self,
        name: str,
        base_url: str,
        model: str,
        api_key_env: Optional[str] = None,
        timeout: float = 300.0,
        rate_limit: Optional[float] = None,
        client: Optional[httpx.Client] = None,
    ):
        self.name = name
        self.model = model
        self.url = base_url.rstrip("/") + "/chat/completions"
        self.api_key_env = api_key_env or f"{re.sub(r'[^A-Za-z0-9]', '_', name).upper()}_API_KEY"
        self.timeout = timeout
        self.limiter = RateLimiter(rate_limit)
        self._client = client

    def payload(self, request: ChatRequest) -> dict:
        body = {"model": self.model, "messages": request.messages, "temperature": request.temperature}
        if request.max_tokens:
            body["max_tokens"] = request.max_tokens
        return body

    def complete(self, request: ChatRequest) -> ChatResponse:
        key = os.environ.get(self.api_key_env)
        headers = {"Content-Type": "application/json"}
        if key:
            headers["Authorization"] = f"Bearer {key}"
        self.limiter.wait()
        client = self._client or httpx.Client(timeout=self.timeout)
        try:
            resp = client.post(self.url, json=self.payload(request), headers=headers)
        except httpx.TimeoutException as exc:
            raise BackendTimeout(STATUS_CLIENT_TIMEOUT, str(exc)) from exc
        except httpx.HTTPError as exc:
            raise BackendError(STATUS_TRANSPORT, str(exc)) from exc
        finally:
            if self._client is None:
                client.close()
        if resp.status_code != 200:
            raise error_for_status(resp.status_code, resp.text[:500])
        try:
            text = resp.json()["choices"][0]["message"]["content"] or ""
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendError(resp.status_code, f"malformed response body: {exc}") from exc
        return ChatResponse(text, resp.status_code)


class MockBackend:
    """Backend driven by a Python callable; records every request."""

    def __init__(self, responder: Callable[[ChatRequest, int], object], name: str = "mock"):
        self.name = name
        self.responder = responder
        self.requests: list[ChatRequest] = []
        self._lock = threading.Lock()

    def complete(self, request: ChatRequest) -> ChatResponse:
        with self._lock:
            idx = len(self.requests)
            self.requests.append(request)
        out = self.responder(request, idx)
        if isinstance(out, BackendError):
            raise out
        if isinstance(out, ChatResponse):
            return out
        return ChatResponse(str(out))


def envelope(text: str) -> str:
    return json.dumps({"continuation": text}, ensure_ascii=False)


# --- deterministic mocks used for the offline pipeline ---------------------

PART_I_OPEN = "<<<PART I>>>"
PART_I_CLOSE = "<<<END PART I>>>"
REFERENCE_OPEN = "<<<REFERENCE>>>"
REFERENCE_CLOSE = "<<<END REFERENCE>>>"
GENERATED_OPEN = "<<<GENERATED>>>"
GENERATED_CLOSE = "<<<END GENERATED>>>"


def _between(text: str, start: str, end: str) -> str:
    i = text.find(start)
    j = text.find(end, i + len(start)) if i >= 0 else -1
    if i < 0 or j < 0:
        return ""
    return text[i + len(start):j].strip("\n")


def _seed(*parts: str) -> int:
    h = hashlib.sha256("\x1f".join(parts).encode("utf-8")).digest()
    return int.from_bytes(h[:8], "big")


@dataclass
class ScriptMock:
    """Continuation mock that recombines lines of Part I.

    ``fidelity`` is the chance a line keeps its original formatting;
    ``fail_every`` makes every n-th distinct prompt fail with ``fail_status``.
    """

    name: str = "mock-writer"
    fidelity: float = 1.0
    fail_every: int = 0
    fail_status: int = 524
    requests: list = field(default_factory=list)

    def complete(self, request: ChatRequest) -> ChatResponse:
        self.requests.append(request)
        user = request.messages[-1]["content"]
        part1 = _between(user, PART_I_OPEN, PART_I_CLOSE)
        rng = random.Random(_seed(self.name, request.tag, user))
        if self.fail_every and rng.randrange(self.fail_every) == 0:
            raise error_for_status(self.fail_status, "mock failure")
        # blank lines stay in the pool so the blank-line density carries over
        lines = [ln.strip() for ln in part1.split("\n")] if part1.strip() else ["……"]
        lo = request.min_chars or 200
        hi = max(lo, request.max_chars or lo)
        target = lo + (hi - lo) // 3
        out: list[str] = []
        size = 0
        while size < target:
            ln = rng.choice(lines)
            if not out and not ln:
                continue
            if ln and rng.random() > self.fidelity:
                ln = re.sub(r"^[\s*0-9.．、第场ΔΔ△▲（(]+|[：:]", "", ln).strip("）) ") or ln
            out.append(ln)
            size += len(ln) + 1
        text = "\n".join(out) + "\n"
        if len(text) > hi:
            text = text[:hi]
        return ChatResponse(envelope(text))


@dataclass
class JudgeMock:
    """Judge mock scoring by character-bigram overlap; always valid JSON."""

    name: str = "mock-judge"
    fence: bool = True
    requests: list = field(default_factory=list)

    def complete(self, request: ChatRequest) -> ChatResponse:
        self.requests.append(request)
        user = request.messages[-1]["content"] if request.messages else ""
        ref = _between(user, REFERENCE_OPEN, REFERENCE_CLOSE)
        gen = _between(user, GENERATED_OPEN, GENERATED_CLOSE)

        def grams(s):
            s = re.sub(r"\s+", "", s)
            return {s[i:i + 2] for i in range(len(s) - 1)}

        a, b = grams(ref), grams(gen)
        jac = len(a & b) / len(a | b) if a | b else 0.0
        base = round(100 * jac)
        scores = {
            "overall_similarity_0_100": base,
            "plot_event_alignment": max(0, base - 10),
            "character_consistency": min(100, base + 5),
            "tone_style_match": min(100, base + 10),
            "format_match": min(100, base + 20),
            "ending_closure": max(0, base // 3),
        }
        verdict = dict(scores)
        verdict["diff_evidence"] = [
            {"reference_quote": ref[:20], "generated_quote": gen[:20], "note": "opening lines"}
        ]
        verdict["mechanism_attribution"] = {
            "problem_definition": "",
            "causal_interpretation": "",
            "moral_evaluation": "",
            "treatment_recommendation": "",
        }
        body = json.dumps(verdict, ensure_ascii=False, indent=1)
        return ChatResponse(f"```json\n{body}\n```" if self.fence else body)
