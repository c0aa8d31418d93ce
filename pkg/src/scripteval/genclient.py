"""Continuation prompts, the chunked generation loop and sample validity."""
from __future__ import annotations

import json
import math
import re
from dataclasses import asdict, dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .backends import (
    MODERATION_STATUSES,
    PART_I_CLOSE,
    PART_I_OPEN,
    TIMEOUT_STATUSES,
    BackendError,
    BackendTimeout,
    ChatBackend,
    ChatRequest,
)

SYSTEM_PROMPT = (
    "You are a senior film screenwriter and script formatting editor. Your only task: "
    'follow the Format Contract of the input script "Part I" exactly and continue the '
    'story directly as "Part II". Output JSON that meets the requirements and give no '
    "additional explanation."
)

STATUS_OK = 200
STATUS_PARSE = 0  # reply arrived but the JSON envelope was unusable


class Validity(str, Enum):
    VALID = "VALID"
    TOO_SHORT = "TOO_SHORT"
    TOO_LONG = "TOO_LONG"
    META_DISCOURSE = "META_DISCOURSE"
    PARSE_FAILURE = "PARSE_FAILURE"
    API_TIMEOUT = "API_TIMEOUT"
    API_MODERATION = "API_MODERATION"
    API_OTHER = "API_OTHER"


@dataclass(frozen=True)
class GenerationConfig:
    min_ratio: float = 0.6
    max_ratio: float = 0.9
    chunk_min_chars: int = 3500
    chunk_max_chars: int = 6500
    tail_context_chars: int = 4000
    max_calls: int = 10
    temperature: float = 0.7
    samples_per_film: int = 3
    timeout_retries: int = 0
    tokens_per_char: float = 1.5
    min_output_tokens: int = 256

    def __post_init__(self):
        if not 0 < self.min_ratio < self.max_ratio <= 1:
            raise ValueError("need 0 < min_ratio < max_ratio <= 1")
        if not 0 < self.chunk_min_chars <= self.chunk_max_chars:
            raise ValueError("need 0 < chunk_min_chars <= chunk_max_chars")
        if self.max_calls < 1:
            raise ValueError("max_calls must be >= 1")
        if self.tail_context_chars < 0 or self.samples_per_film < 1 or self.timeout_retries < 0:
            raise ValueError("invalid generation config")

    @classmethod
    def from_dict(cls, d: dict) -> "GenerationConfig":
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


def target_range(l_up: int, config: GenerationConfig = GenerationConfig()) -> tuple[int, int]:
    """(floor(min_ratio * L_up), floor(max_ratio * L_up))."""
    if l_up <= 0:
        raise ValueError(f"first-half length must be positive, got {l_up}")
    # round first so 0.6 * 20000 does not floor to 11999 through float error
    lo = math.floor(round(config.min_ratio * l_up, 9))
    hi = math.floor(round(config.max_ratio * l_up, 9))
    return lo, hi


def build_prompts(upper: str, contract: str, config: GenerationConfig = GenerationConfig()) -> tuple[str, str]:
    """System and user message for the first chunk of a continuation."""
    if not upper or not contract:
        raise ValueError("upper text and contract must be non-empty")
    lo, hi = target_range(len(upper), config)
    pct_lo = f"{config.min_ratio * 100:g}%"
    pct_hi = f"{config.max_ratio * 100:g}%"
    user = "\n".join([
        "Continue the screenplay below. Part I is the first half of the script.",
        "",
        contract.rstrip("\n"),
        "",
        PART_I_OPEN,
        upper.rstrip("\n"),
        PART_I_CLOSE,
        "",
        "Hard constraints:",
        "1. Format: follow the Format Contract above item by item.",
        "2. Continuity: keep the characters, their relationships and the unresolved conflicts of Part I.",
        "3. Narrative: keep the genre atmosphere and the language style of Part I.",
        '4. Boundary: no meta-discourse (no "Here is the continuation", no notes, no commentary).',
        f"5. Length: the continuation must be {pct_lo}-{pct_hi} of the length of Part I, "
        f"i.e. {lo}-{hi} characters in total.",
        "",
        'Output format: a single JSON object {"continuation": "<Part II text>"} and nothing else.',
    ])
    return SYSTEM_PROMPT, user


def chunk_request(
    system: str,
    user: str,
    context: str,
    call_idx: int,
    lo: int,
    hi: int,
    config: GenerationConfig,
    tag: str = "",
) -> ChatRequest:
    parts = [user, ""]
    if context:
        parts += [
            "Part II written so far ends with the following text; continue seamlessly from it "
            "without repeating it:",
            "<<<PART II TAIL>>>",
            context,
            "<<<END PART II TAIL>>>",
            "",
        ]
    parts.append(f"This is segment {call_idx + 1}. Write {lo}-{hi} characters for this segment only.")
    max_tokens = max(config.min_output_tokens, math.ceil(hi * config.tokens_per_char))
    return ChatRequest(
        messages=[{"role": "system", "content": system}, {"role": "user", "content": "\n".join(parts)}],
        temperature=config.temperature,
        max_tokens=max_tokens,
        context=context,
        tag=tag,
        min_chars=lo,
        max_chars=hi,
    )


_FENCE = re.compile(r"^\s*```[a-zA-Z]*\s*\n?(.*?)\n?```\s*$", re.DOTALL)


def parse_envelope(reply: str) -> Optional[str]:
    """Continuation text from a ``{"continuation": ...}`` reply, or None."""
    s = reply.strip()
    m = _FENCE.match(s)
    if m:
        s = m.group(1).strip()
    start = s.find("{")
    if start < 0:
        return None
    try:
        obj, _ = json.JSONDecoder().raw_decode(s[start:])
    except json.JSONDecodeError:
        return None
    if not isinstance(obj, dict) or not isinstance(obj.get("continuation"), str):
        return None
    return obj["continuation"]


@dataclass
class ChunkTrace:
    call_idx: int
    chars: int
    status: int


@dataclass
class GenerationSample:
    model_id: str
    film_id: str
    sample_idx: int
    text: str = ""
    chunk_trace: list = field(default_factory=list)
    validity: Optional[Validity] = None
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "film_id": self.film_id,
            "sample_idx": self.sample_idx,
            "text": self.text,
            "chunk_trace": [[t.call_idx, t.chars, t.status] for t in self.chunk_trace],
            "validity": self.validity.value if self.validity else None,
            "reason": self.reason,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GenerationSample":
        return cls(
            model_id=d["model_id"],
            film_id=d["film_id"],
            sample_idx=int(d["sample_idx"]),
            text=d.get("text", ""),
            chunk_trace=[ChunkTrace(*t) for t in d.get("chunk_trace", [])],
            validity=Validity(d["validity"]) if d.get("validity") else None,
            reason=d.get("reason", ""),
        )


def continue_script(
    upper: str,
    contract: str,
    backend: ChatBackend,
    config: GenerationConfig = GenerationConfig(),
    blacklist: Sequence[str] = (),
    model_id: str = "",
    film_id: str = "",
    sample_idx: int = 0,
) -> GenerationSample:
    """Chunked generation loop.

    Each call asks for a segment of ``chunk_min_chars``-``chunk_max_chars``
    characters (clamped to what is left below the upper target) and sees the
    last ``tail_context_chars`` of the accumulated output. The loop stops at
    the lower target, after ``max_calls`` calls, or on the first failure.
    """
    l_up = len(upper)
    min_len, max_len = target_range(l_up, config)
    system, user = build_prompts(upper, contract, config)
    sample = GenerationSample(model_id=model_id or getattr(backend, "name", ""), film_id=film_id, sample_idx=sample_idx)
    chunks: list[str] = []
    acc = 0
    for call_idx in range(config.max_calls):
        if acc >= min_len:
            break
        remaining = max_len - acc
        if remaining <= 0:
            break
        lo, hi = min(config.chunk_min_chars, remaining), min(config.chunk_max_chars, remaining)
        tail = "".join(chunks)[-config.tail_context_chars:] if config.tail_context_chars else ""
        tag = f"{film_id}/{sample_idx}/{call_idx}"
        request = chunk_request(system, user, tail, call_idx, lo, hi, config, tag)
        try:
            reply = _call_with_retry(backend, request, config.timeout_retries)
        except BackendError as exc:
            sample.chunk_trace.append(ChunkTrace(call_idx, 0, exc.status))
            sample.reason = str(exc)
            break
        piece = parse_envelope(reply.text)
        if piece is None:
            sample.chunk_trace.append(ChunkTrace(call_idx, 0, STATUS_PARSE))
            sample.reason = "reply is not a continuation JSON envelope"
            break
        chunks.append(piece)
        acc += len(piece)
        sample.chunk_trace.append(ChunkTrace(call_idx, len(piece), reply.status))
    sample.text = "".join(chunks)
    sample.validity = classify_validity(sample, l_up, config, blacklist)
    return sample


def _call_with_retry(backend: ChatBackend, request: ChatRequest, retries: int):
    for attempt in range(retries + 1):
        try:
            return backend.complete(request)
        except BackendTimeout:
            if attempt == retries:
                raise


def load_blacklist(path: Optional[Path] = None) -> list[str]:
    """Meta-discourse phrases, one per line; ``#`` starts a comment."""
    if path is None:
        raw = resources.files("scripteval").joinpath("data/meta_blacklist.txt").read_text(encoding="utf-8")
    else:
        raw = Path(path).read_text(encoding="utf-8")
    return [ln.strip() for ln in raw.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]


def has_meta_discourse(text: str, blacklist: Iterable[str], edge: int = 200) -> bool:
    head, tail = text[:edge].casefold(), text[-edge:].casefold()
    for phrase in blacklist:
        p = phrase.casefold()
        if p and (p in head or p in tail):
            return True
    return False


def classify_validity(
    sample: GenerationSample,
    l_up: int,
    config: GenerationConfig = GenerationConfig(),
    blacklist: Sequence[str] = (),
) -> Validity:
    """First failing check wins: API error, parse failure, too short, too long, meta-discourse."""
    for t in sample.chunk_trace:
        if t.status in TIMEOUT_STATUSES:
            return Validity.API_TIMEOUT
        if t.status in MODERATION_STATUSES:
            return Validity.API_MODERATION
        if t.status not in (STATUS_OK, STATUS_PARSE):
            return Validity.API_OTHER
    if any(t.status == STATUS_PARSE for t in sample.chunk_trace):
        return Validity.PARSE_FAILURE
    lo, hi = target_range(l_up, config)
    n = len(sample.text)
    if n < lo:
        return Validity.TOO_SHORT
    if n > hi:
        return Validity.TOO_LONG
    if has_meta_discourse(sample.text, blacklist):
        return Validity.META_DISCOURSE
    return Validity.VALID


def validity_rate(samples: Sequence[GenerationSample], theoretical: int) -> float:
    if theoretical <= 0:
        raise ValueError("theoretical sample count must be positive")
    valid = sum(1 for s in samples if s.validity is Validity.VALID)
    if valid > theoretical:
        raise ValueError(f"{valid} valid samples exceed theoretical count {theoretical}")
    return valid / theoretical


def format_rate(rate: float) -> str:
    return f"{rate * 100:.1f}%"
