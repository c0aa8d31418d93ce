"""Script ingestion: cleaning, upper/lower split, quality filter, JSONL index."""
from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, NamedTuple, Optional, Sequence

UTF8_BOM = b"\xef\xbb\xbf"

# Whole lines removed by clean_text. Kept conservative: bare "12." lines are
# scene headers in some scripts, so plain numbers are not treated as noise.
DEFAULT_NOISE_PATTERNS: tuple[str, ...] = (
    r"^[ \t]*-[ \t]*\d+[ \t]*-[ \t]*$",  # "- 12 -" page numbers
    r"^[ \t]*(?:page[ \t]*\d+|第[ \t]*\d+[ \t]*页)[ \t]*$",
    r"^[ \t]*[\[【][ \t]*(?:注|整理|录入|校对|note|transcriber)[^\]】\n]*[\]】][ \t]*$",
)

DEFAULT_MIN_CHARS = 1000
SPLIT_WINDOW = 0.10


class EncodingError(ValueError):
    """Raised when raw script bytes cannot be decoded."""

    def __init__(self, offset: int, encoding: str, reason: str):
        super().__init__(f"cannot decode as {encoding} at byte offset {offset}: {reason}")
        self.offset = offset
        self.encoding = encoding


def clean_text(
    raw: bytes,
    encoding: Optional[str] = None,
    noise_patterns: Sequence[str] = DEFAULT_NOISE_PATTERNS,
) -> str:
    """Decode and normalise a raw script file.

    UTF-8 is tried first (after stripping a BOM); ``encoding`` names a legacy
    fallback such as ``gb18030``. Line endings become LF, trailing blanks on
    each line are dropped and lines matching ``noise_patterns`` are removed.
    The function is idempotent on its own output.
    """
    if isinstance(raw, str):
        raw = raw.encode("utf-8")
    if raw.startswith(UTF8_BOM):
        raw = raw[len(UTF8_BOM):]
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        if encoding is None or encoding.replace("-", "").lower() == "utf8":
            raise EncodingError(exc.start, "utf-8", exc.reason) from None
        try:
            text = raw.decode(encoding)
        except UnicodeDecodeError as exc2:
            raise EncodingError(exc2.start, encoding, exc2.reason) from None
    text = text.lstrip("﻿")
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    lines = [ln.rstrip(" \t　") for ln in text.split("\n")]
    if noise_patterns:
        noise = re.compile("|".join(f"(?:{p})" for p in noise_patterns), re.IGNORECASE)
        lines = [ln for ln in lines if not noise.match(ln)]
    return "\n".join(lines)


_BLANK_RUN = re.compile(r"\n(?:[ \t]*\n)+")


def _nearest(candidates: Iterable[int], target: float) -> Optional[int]:
    best = None
    for c in candidates:
        if best is None or abs(c - target) < abs(best - target):
            best = c
    return best


def split_point(text: str, ratio: float = 0.5, window: float = SPLIT_WINDOW) -> int:
    """Character index where ``text`` is cut into upper and lower halves.

    Preference order: the end of the blank-line run nearest to
    ``ratio * len(text)`` (if within ``window * len(text)``), then the
    nearest line break, then the raw character index.
    """
    if not text:
        raise ValueError("cannot split empty text")
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    n = len(text)
    target = ratio * n
    blanks = (m.end() for m in _BLANK_RUN.finditer(text) if 0 < m.end() < n)
    best = _nearest(blanks, target)
    if best is not None and abs(best - target) <= max(1.0, window * n):
        return best
    breaks = (m.end() for m in re.finditer("\n", text) if 0 < m.end() < n)
    best = _nearest(breaks, target)
    if best is not None:
        return best
    return int(target)


def split_halves(text: str, ratio: float = 0.5) -> tuple[str, str]:
    """Split normalised text into (upper, lower); ``upper + lower == text``."""
    cut = split_point(text, ratio)
    return text[:cut], text[cut:]


@dataclass
class FilmRecord:
    film_id: str
    title: str
    year: Optional[int]
    genre: Optional[str]
    upper_path: str
    lower_path: str
    upper_chars: int
    lower_chars: int
    profile_path: str
    contract_path: str

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "FilmRecord":
        names = [f.name for f in fields(cls)]
        missing = [k for k in names if k not in d]
        if missing:
            raise ValueError(f"index row missing keys: {missing}")
        return cls(**{k: d[k] for k in names})

    def resolve(self, base: Path, attr: str) -> Path:
        p = Path(getattr(self, attr))
        return p if p.is_absolute() else base / p


class FilterDecision(NamedTuple):
    keep: bool
    reason: Optional[str] = None


def quality_filter(
    record: FilmRecord, base: Path = Path("."), min_chars: int = DEFAULT_MIN_CHARS
) -> FilterDecision:
    """Keep a film only if both halves exist on disk and meet ``min_chars``.

    Counts are recomputed from the files; a missing file raises instead of
    producing a drop.
    """
    upper = record.resolve(base, "upper_path").read_text(encoding="utf-8")
    lower = record.resolve(base, "lower_path").read_text(encoding="utf-8")
    if not upper.strip() or not lower.strip():
        return FilterDecision(False, "incomplete")
    if len(upper) < min_chars or len(lower) < min_chars:
        return FilterDecision(False, "too_short")
    return FilterDecision(True)


def build_index(records: Sequence[FilmRecord], path: Path) -> Path:
    """Write records as JSONL sorted by film_id. Duplicate ids are an error."""
    seen = set()
    for r in records:
        if r.film_id in seen:
            raise ValueError(f"duplicate film_id in index: {r.film_id!r}")
        seen.add(r.film_id)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for r in sorted(records, key=lambda r: r.film_id):
            fh.write(json.dumps(r.to_dict(), ensure_ascii=False) + "\n")
    return path


def read_index(path: Path) -> list[FilmRecord]:
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(FilmRecord.from_dict(json.loads(line)))
    return out


@dataclass
class IngestResult:
    records: list[FilmRecord]
    dropped: list[tuple[str, str]]


def ingest_directory(
    src: Path,
    out_dir: Path,
    ratio: float = 0.5,
    min_chars: int = DEFAULT_MIN_CHARS,
    encoding: Optional[str] = None,
) -> IngestResult:
    """Clean, split and filter every ``*.txt`` script under ``src``.

    Halves are written to ``out_dir/films/<film_id>/``; stored paths are
    relative to ``out_dir``. An optional ``meta.json`` in ``src`` maps
    film_id to ``{"title", "year", "genre"}``.
    """
    src, out_dir = Path(src), Path(out_dir)
    files = sorted(src.glob("*.txt"))
    if not files:
        raise FileNotFoundError(f"no *.txt scripts found in {src}")
    meta_path = src / "meta.json"
    meta = json.loads(meta_path.read_text(encoding="utf-8")) if meta_path.exists() else {}

    records, dropped = [], []
    for f in files:
        film_id = f.stem
        text = clean_text(f.read_bytes(), encoding=encoding)
        film_dir = Path("films") / film_id
        (out_dir / film_dir).mkdir(parents=True, exist_ok=True)
        upper, lower = split_halves(text, ratio) if text else ("", "")
        (out_dir / film_dir / "upper.txt").write_text(upper, encoding="utf-8", newline="\n")
        (out_dir / film_dir / "lower.txt").write_text(lower, encoding="utf-8", newline="\n")
        m = meta.get(film_id, {})
        rec = FilmRecord(
            film_id=film_id,
            title=m.get("title", film_id.replace("_", " ")),
            year=m.get("year"),
            genre=m.get("genre"),
            upper_path=(film_dir / "upper.txt").as_posix(),
            lower_path=(film_dir / "lower.txt").as_posix(),
            upper_chars=len(upper),
            lower_chars=len(lower),
            profile_path=(film_dir / "profile.json").as_posix(),
            contract_path=(film_dir / "contract.txt").as_posix(),
        )
        decision = quality_filter(rec, out_dir, min_chars)
        if decision.keep:
            records.append(rec)
        else:
            dropped.append((film_id, decision.reason))
    return IngestResult(records, dropped)


def corpus_summary(records: Sequence[FilmRecord]) -> dict:
    """Dataset statistics: film count, mean half lengths, extremes, year range."""
    if not records:
        return {"total_films": 0}
    totals = [(r.upper_chars + r.lower_chars, r) for r in records]
    longest = max(totals, key=lambda t: (t[0], t[1].film_id))
    shortest = min(totals, key=lambda t: (t[0], t[1].film_id))
    years = [r.year for r in records if r.year is not None]
    return {
        "total_films": len(records),
        "mean_upper_chars": sum(r.upper_chars for r in records) / len(records),
        "mean_lower_chars": sum(r.lower_chars for r in records) / len(records),
        "longest": {"chars": longest[0], "title": longest[1].title},
        "shortest": {"chars": shortest[0], "title": shortest[1].title},
        "year_range": [min(years), max(years)] if years else None,
    }


def format_summary(summary: dict) -> str:
    if not summary.get("total_films"):
        return "Total Films\t0"
    rows = [
        ("Total Films", f"{summary['total_films']}"),
        ("Mean First-Half Characters", f"{summary['mean_upper_chars']:,.0f}"),
        ("Mean Second-Half Characters", f"{summary['mean_lower_chars']:,.0f}"),
        ("Longest Script (characters)", f"{summary['longest']['chars']:,} ({summary['longest']['title']})"),
        ("Shortest Script (characters)", f"{summary['shortest']['chars']:,} ({summary['shortest']['title']})"),
    ]
    if summary.get("year_range"):
        lo, hi = summary["year_range"]
        rows.append(("Year Range", f"{lo}-{hi}"))
    return "\n".join(f"{k}\t{v}" for k, v in rows)
