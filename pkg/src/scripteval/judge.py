"""LLM-as-judge prompts and structured verdict parsing."""
from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional, Union

from .backends import BackendError, ChatBackend, ChatRequest
from .formatting import FormatProfile

SCORE_KEYS = (
    "overall_similarity_0_100",
    "plot_event_alignment",
    "character_consistency",
    "tone_style_match",
    "format_match",
    "ending_closure",
)
ATTRIBUTION_KEYS = ("problem_definition", "causal_interpretation", "moral_evaluation", "treatment_recommendation")
MAX_EVIDENCE = 10
MAX_ATTRIBUTION_CHARS = 2000
DEFAULT_TEXT_BUDGET = 12000
PROMPT_VERSION = "judge_prompt_v1"

REASK = (
    "Your previous reply could not be parsed. Reply again with ONLY the JSON object, "
    "using exactly the keys requested, every score a number between 0 and 100."
)


class VerdictError(ValueError):
    pass


class VerdictParseError(VerdictError):
    """No JSON object could be extracted from the reply."""


class VerdictSchemaError(VerdictError):
    def __init__(self, key: str, message: str = ""):
        super().__init__(message or f"missing or non-numeric score key {key!r}")
        self.key = key


class VerdictRangeError(VerdictError):
    def __init__(self, key: str, value):
        super().__init__(f"score {key!r}={value!r} outside [0, 100]")
        self.key = key


class JudgeFailure(Exception):
    """Judge stage failed for one sample; generation validity is unaffected."""

    def __init__(self, message: str, raw: str = "", attempts: int = 0, transport: bool = False):
        super().__init__(message)
        self.raw = raw
        self.attempts = attempts
        self.transport = transport


@dataclass
class JudgeScores:
    overall_similarity_0_100: float
    plot_event_alignment: float
    character_consistency: float
    tone_style_match: float
    format_match: float
    ending_closure: float

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in SCORE_KEYS}


@dataclass
class JudgeVerdict:
    scores: JudgeScores
    diff_evidence: list = field(default_factory=list)
    mechanism_attribution: dict = field(default_factory=lambda: {k: "" for k in ATTRIBUTION_KEYS})
    raw: str = field(default="", compare=False)
    attempts: int = field(default=1, compare=False)

    def to_dict(self) -> dict:
        d = self.scores.to_dict()
        d["diff_evidence"] = [dict(e) for e in self.diff_evidence]
        d["mechanism_attribution"] = dict(self.mechanism_attribution)
        return d

    def serialize(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def prompt_template() -> str:
    return resources.files("scripteval").joinpath(f"data/{PROMPT_VERSION}.txt").read_text(encoding="utf-8")


def prompt_hash() -> str:
    return hashlib.sha256(prompt_template().encode("utf-8")).hexdigest()[:16]


def truncate_head_tail(text: str, budget: int) -> tuple[str, bool]:
    """Keep the first and last ``budget // 2`` characters of an oversized text."""
    if len(text) <= budget:
        return text, False
    head = budget // 2
    tail = budget - head
    dropped = len(text) - budget
    return f"{text[:head]}\n[... {dropped} characters omitted ...]\n{text[-tail:]}", True


def _profile_summary(profile: FormatProfile) -> str:
    return "\n".join(f"- {k}: {v}" for k, v in profile.to_dict().items() if k != "examples")


def build_judge_prompt(
    reference: str, generated: str, profile: FormatProfile, budget: int = DEFAULT_TEXT_BUDGET
) -> tuple[str, str]:
    if not reference or not generated:
        raise ValueError("reference and generated text must be non-empty")
    tpl = prompt_template()
    system, user = tpl.split("### USER\n", 1)
    system = system.replace("### SYSTEM\n", "", 1).strip()
    ref, ref_cut = truncate_head_tail(reference, budget)
    gen, gen_cut = truncate_head_tail(generated, budget)
    note = ""
    if ref_cut or gen_cut:
        which = " and ".join(n for n, c in (("REFERENCE", ref_cut), ("GENERATED", gen_cut)) if c)
        note = (
            f"\nNote: {which} exceeded {budget} characters and was truncated to its "
            "beginning and end; judge the visible parts.\n"
        )
    user = user.format(
        profile_summary=_profile_summary(profile),
        truncation_note=note,
        reference=ref.rstrip("\n"),
        generated=gen.rstrip("\n"),
    )
    return system, user


_FENCE = re.compile(r"```(?:json|JSON)?\s*\n?(.*?)```", re.DOTALL)


def _extract_object(text: str) -> Optional[dict]:
    candidates = [m.group(1) for m in _FENCE.finditer(text)] + [text]
    dec = json.JSONDecoder()
    for cand in candidates:
        pos = cand.find("{")
        while pos >= 0:
            try:
                obj, _ = dec.raw_decode(cand, pos)
            except (json.JSONDecodeError, RecursionError):
                pos = cand.find("{", pos + 1)
                continue
            if isinstance(obj, dict):
                return obj
            pos = cand.find("{", pos + 1)
    return None


def _score(obj: dict, key: str) -> float:
    if key not in obj:
        raise VerdictSchemaError(key)
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise VerdictSchemaError(key, f"score {key!r} is not a number: {v!r}")
    v = float(v)
    if not (0.0 <= v <= 100.0):
        raise VerdictRangeError(key, obj[key])
    return v


def _text(v, limit: int) -> str:
    if v is None:
        return ""
    s = v if isinstance(v, str) else json.dumps(v, ensure_ascii=False)
    return s[:limit]


def parse_verdict(response: Union[str, bytes]) -> JudgeVerdict:
    """Validate a judge reply.

    Code fences and surrounding prose are tolerated; scores may sit at the top
    level or under a ``"scores"`` object.
    """
    if isinstance(response, (bytes, bytearray)):
        response = bytes(response).decode("utf-8", errors="replace")
    obj = _extract_object(response)
    if obj is None:
        raise VerdictParseError("no JSON object found in judge reply")
    src = obj["scores"] if isinstance(obj.get("scores"), dict) else obj
    scores = JudgeScores(*(_score(src, k) for k in SCORE_KEYS))

    evidence = []
    raw_ev = obj.get("diff_evidence") or []
    if isinstance(raw_ev, list):
        for e in raw_ev[:MAX_EVIDENCE]:
            if isinstance(e, dict):
                evidence.append({
                    "reference_quote": _text(e.get("reference_quote"), MAX_ATTRIBUTION_CHARS),
                    "generated_quote": _text(e.get("generated_quote"), MAX_ATTRIBUTION_CHARS),
                    "note": _text(e.get("note"), MAX_ATTRIBUTION_CHARS),
                })
    attr_src = obj.get("mechanism_attribution")
    attr_src = attr_src if isinstance(attr_src, dict) else {}
    attribution = {k: _text(attr_src.get(k), MAX_ATTRIBUTION_CHARS) for k in ATTRIBUTION_KEYS}
    return JudgeVerdict(scores, evidence, attribution, raw=response)


def judge_sample(
    reference: str,
    generated: str,
    profile: FormatProfile,
    backend: ChatBackend,
    max_reasks: int = 2,
    temperature: float = 0.0,
    budget: int = DEFAULT_TEXT_BUDGET,
) -> JudgeVerdict:
    """One judge call plus up to ``max_reasks`` re-asks on unparseable replies."""
    system, user = build_judge_prompt(reference, generated, profile, budget)
    messages = [{"role": "system", "content": system}, {"role": "user", "content": user}]
    last_raw, last_err = "", None
    for attempt in range(1, max_reasks + 2):
        try:
            reply = backend.complete(ChatRequest(messages=list(messages), temperature=temperature))
        except BackendError as exc:
            raise JudgeFailure(f"judge transport failure: {exc}", last_raw, attempt, transport=True) from exc
        last_raw = reply.text
        try:
            verdict = parse_verdict(reply.text)
        except VerdictError as exc:
            last_err = exc
            messages += [{"role": "assistant", "content": reply.text}, {"role": "user", "content": REASK}]
            continue
        verdict.attempts = attempt
        return verdict
    raise JudgeFailure(f"judge reply unusable after {max_reasks + 1} attempts: {last_err}", last_raw, max_reasks + 1)
