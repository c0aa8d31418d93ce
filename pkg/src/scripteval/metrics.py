"""ROUGE-L, Structural Similarity and the composite score."""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .formatting import StructuralFeatures, extract_features
from .kernels import lcs_kernel

TOKENIZER_MODES = ("cjk_words", "chars")
STRUCT_EPS = 1e-6

_CHAR_TOKEN = re.compile(r"[A-Za-z0-9]+|\S")
_jieba = None


def _segmenter():
    global _jieba
    if _jieba is None:
        import jieba

        jieba.setLogLevel(logging.WARNING)
        tk = jieba.Tokenizer()
        tk.initialize()
        _jieba = tk
    return _jieba


def tokenizer_id(mode: str) -> str:
    """Mode plus segmenter version, recorded next to every score."""
    if mode == "cjk_words":
        import jieba

        return f"cjk_words/jieba-{jieba.__version__}"
    return mode


def tokenize(text: str, mode: str = "cjk_words") -> list[str]:
    """Deterministic tokenisation; whitespace never becomes a token.

    ``cjk_words`` uses jieba's bundled dictionary, ``chars`` splits CJK text
    per character and keeps latin/digit runs whole.
    """
    if mode == "chars":
        return _CHAR_TOKEN.findall(text)
    if mode == "cjk_words":
        if not text:
            return []
        return [t for t in _segmenter().lcut(text) if not t.isspace()]
    raise ValueError(f"unknown tokenizer mode {mode!r}; expected one of {TOKENIZER_MODES}")


def _encode(a: Sequence, b: Sequence) -> tuple[np.ndarray, np.ndarray]:
    vocab: dict = {}
    ia = np.fromiter((vocab.setdefault(t, len(vocab)) for t in a), dtype=np.int64, count=len(a))
    ib = np.fromiter((vocab.setdefault(t, len(vocab)) for t in b), dtype=np.int64, count=len(b))
    return ia, ib


def lcs_length(a: Sequence, b: Sequence) -> int:
    """Exact LCS length of two token sequences (linear-space DP)."""
    if not a or not b:
        return 0
    ia, ib = _encode(a, b)
    return lcs_kernel(ia, ib)


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float
    lcs_len: int

    def to_dict(self) -> dict:
        return {"p": self.precision, "r": self.recall, "f1": self.f1, "lcs": self.lcs_len}


def rouge_l(gen: Sequence, ref: Sequence) -> RougeScore:
    lcs = lcs_length(gen, ref)
    p = lcs / len(gen) if gen else 0.0
    r = lcs / len(ref) if ref else 0.0
    f1 = 0.0 if p + r == 0 else 2 * p * r / (p + r)
    return RougeScore(p, r, f1, lcs)


def structural_similarity(gen_f, ref_f, eps: float = STRUCT_EPS) -> float:
    """1 - L1(gen - ref) / (L1(ref) + eps), clamped to [0, 1].

    Accepts :class:`StructuralFeatures` or plain 5-sequences.
    """
    g = gen_f.as_tuple() if hasattr(gen_f, "as_tuple") else tuple(gen_f)
    r = ref_f.as_tuple() if hasattr(ref_f, "as_tuple") else tuple(ref_f)
    if len(g) != len(r):
        raise ValueError(f"feature arity mismatch: {len(g)} vs {len(r)}")
    num = sum(abs(x - y) for x, y in zip(g, r))
    if num == 0:
        return 1.0
    den = sum(abs(y) for y in r) + eps
    return min(1.0, max(0.0, 1.0 - num / den))


@dataclass(frozen=True)
class CompositeWeights:
    w_rouge: float = 0.4
    w_struct: float = 0.3
    w_overall: float = 0.3

    def __post_init__(self):
        total = self.w_rouge + self.w_struct + self.w_overall
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"composite weights must sum to 1, got {total}")
        if min(self.w_rouge, self.w_struct, self.w_overall) < 0:
            raise ValueError("composite weights must be non-negative")


def composite(
    rouge_f1: float, struct: float, overall_0_100: float, w: CompositeWeights = CompositeWeights()
) -> float:
    for name, v, hi in (("rouge_f1", rouge_f1, 1.0), ("struct", struct, 1.0), ("overall", overall_0_100, 100.0)):
        if not 0.0 <= v <= hi:
            raise ValueError(f"{name}={v} outside [0, {hi:g}]")
    return w.w_rouge * rouge_f1 + w.w_struct * struct + w.w_overall * overall_0_100 / 100.0


@dataclass
class ScoreCard:
    """All per-sample metrics of one generated continuation."""

    rouge: RougeScore
    features: StructuralFeatures
    ref_features: StructuralFeatures
    struct_sim: float
    overall: Optional[float] = None
    composite: Optional[float] = None
    tokenizer_mode: str = "cjk_words"


def score_sample(
    generated: str,
    reference: str,
    profile,
    mode: str = "cjk_words",
    overall: Optional[float] = None,
    weights: CompositeWeights = CompositeWeights(),
    ref_tokens: Optional[Sequence[str]] = None,
) -> ScoreCard:
    """Score one continuation against the real second half.

    Structural features of both texts use the detectors selected by the
    film's profile. ``composite`` is filled only when a judge score is given.
    ``ref_tokens`` lets callers reuse the reference tokenisation across samples.
    """
    if ref_tokens is None:
        ref_tokens = tokenize(reference, mode)
    rouge = rouge_l(tokenize(generated, mode), ref_tokens)
    gf = extract_features(generated, profile)
    rf = extract_features(reference, profile)
    s = structural_similarity(gf, rf)
    comp = composite(rouge.f1, s, overall, weights) if overall is not None else None
    return ScoreCard(rouge, gf, rf, s, overall, comp, tokenizer_id(mode))
