import json

import pytest
from hypothesis import given, settings, strategies as st

from scripteval.corpus import (
    EncodingError, FilmRecord, build_index, clean_text, corpus_summary, ingest_directory,
    quality_filter, read_index, split_halves, split_point,
)


def test_crlf_normalised():
    assert clean_text(b"A\r\nB") == "A\nB"


def test_bom_stripped():
    assert clean_text(b"\xef\xbb\xbfhello\n") == "hello\n"


def test_clean_idempotent_on_clean_text():
    s = "场景1\n\n唐仁：走！\n"
    assert clean_text(s.encode()) == s


def test_noise_lines_removed():
    raw = "甲：你好\n- 12 -\n第3页\n[注：原稿缺页]\n乙：再见".encode()
    assert clean_text(raw) == "甲：你好\n乙：再见"


def test_legacy_encoding_fallback():
    assert clean_text("秦风：走".encode("gb18030"), encoding="gb18030") == "秦风：走"


def test_undecodable_names_offset():
    with pytest.raises(EncodingError) as ei:
        clean_text(b"ok\xff\xfe")
    assert ei.value.offset == 2


@given(st.text(alphabet="ab \t\r\n　", max_size=60))
def test_clean_idempotent(s):
    once = clean_text(s.encode())
    assert clean_text(once.encode()) == once


def test_split_symmetric_blank_line():
    # 10 chars, the blank-line run ends exactly at the midpoint
    assert split_halves("abc\n\nabcd") == ("abc\n\n", "abcd")


def test_split_at_line_break_without_blank_lines():
    text = "aaaaaaaa\nbbbbbbbbbbb\ncccccccc"
    up, low = split_halves(text)
    assert up + low == text
    # breaks at 9 and 21, target 14.5
    assert up == "aaaaaaaa\n"


def test_split_single_line_raw_midpoint():
    assert split_halves("abcdefghij") == ("abcde", "fghij")


def test_split_empty_rejected():
    with pytest.raises(ValueError):
        split_halves("")


@given(st.text(alphabet="ab\n ", min_size=1, max_size=200), st.floats(0.05, 0.95))
def test_concatenation_identity(text, ratio):
    up, low = split_halves(text, ratio)
    assert up + low == text


@settings(max_examples=200)
@given(st.lists(st.text(alphabet="xyz", min_size=1, max_size=30), min_size=2, max_size=40))
def test_blank_boundary_close_to_target(paras):
    text = "\n\n".join(paras)
    k = split_point(text)
    target = len(text) / 2
    blanks = [i + 2 for i in range(len(text) - 1) if text[i:i + 2] == "\n\n"]
    window = max(1, 0.02 * len(text))
    if any(abs(b - target) <= window for b in blanks):
        # longest line counts as "one line" of slack
        slack = max(window, max(len(p) for p in paras) + 2)
        assert abs(k - target) <= slack


def _write_film(tmp_path, film_id, upper, lower):
    d = tmp_path / "films" / film_id
    d.mkdir(parents=True)
    (d / "upper.txt").write_text(upper, encoding="utf-8")
    (d / "lower.txt").write_text(lower, encoding="utf-8")
    return FilmRecord(film_id, film_id, None, None, f"films/{film_id}/upper.txt", f"films/{film_id}/lower.txt",
                      len(upper), len(lower), f"films/{film_id}/profile.json", f"films/{film_id}/contract.txt")


def test_quality_filter_keeps_long_film(tmp_path):
    rec = _write_film(tmp_path, "01", "甲" * 21322, "乙" * 17078)
    assert quality_filter(rec, tmp_path).keep


def test_quality_filter_incomplete(tmp_path):
    rec = _write_film(tmp_path, "02", "甲" * 2000, "")
    d = quality_filter(rec, tmp_path)
    assert (d.keep, d.reason) == (False, "incomplete")


def test_quality_filter_too_short(tmp_path):
    rec = _write_film(tmp_path, "03", "甲" * 500, "乙" * 2000)
    assert quality_filter(rec, tmp_path).reason == "too_short"


def test_quality_filter_missing_file_raises(tmp_path):
    rec = _write_film(tmp_path, "04", "a", "b")
    (tmp_path / rec.upper_path).unlink()
    with pytest.raises(OSError):
        quality_filter(rec, tmp_path)


def test_index_round_trip_and_order(tmp_path):
    recs = [FilmRecord(f"{i:02d}", f"t{i}", 2000 + i, "drama", "u", "l", 10, 20, "p", "c") for i in (53, 2, 17)]
    path = build_index(recs, tmp_path / "index.jsonl")
    back = read_index(path)
    assert [r.film_id for r in back] == ["02", "17", "53"]
    assert sorted(recs, key=lambda r: r.film_id) == back
    first = json.loads(path.read_text(encoding="utf-8").splitlines()[0])
    assert list(first) == ["film_id", "title", "year", "genre", "upper_path", "lower_path",
                           "upper_chars", "lower_chars", "profile_path", "contract_path"]


def test_index_53_lines(tmp_path):
    recs = [FilmRecord(f"{i:02d}", "t", None, None, "u", "l", 1, 1, "p", "c") for i in range(53)]
    assert len(build_index(recs, tmp_path / "i.jsonl").read_text().splitlines()) == 53


def test_index_empty(tmp_path):
    p = build_index([], tmp_path / "i.jsonl")
    assert p.read_text() == "" and read_index(p) == []


def test_index_duplicate_rejected(tmp_path):
    r = FilmRecord("x", "t", None, None, "u", "l", 1, 1, "p", "c")
    with pytest.raises(ValueError):
        build_index([r, r], tmp_path / "i.jsonl")


def test_ingest_drops_short_file(tmp_path):
    src = tmp_path / "src"
    src.mkdir()
    for name in ("a", "b"):
        (src / f"{name}.txt").write_text("\n\n".join(["台词：" + "很长的一句话" * 20] * 30), encoding="utf-8")
    (src / "short.txt").write_text("甲：短\n\n乙：短", encoding="utf-8")
    res = ingest_directory(src, tmp_path / "out")
    assert [r.film_id for r in res.records] == ["a", "b"]
    assert res.dropped == [("short", "too_short")]
    for r in res.records:
        assert len(r.resolve(tmp_path / "out", "upper_path").read_text(encoding="utf-8")) == r.upper_chars


def test_ingest_empty_dir(tmp_path):
    with pytest.raises(FileNotFoundError):
        ingest_directory(tmp_path, tmp_path / "out")


def test_summary_mean():
    recs = [FilmRecord("a", "A", 2010, None, "u", "l", 19835, 100, "p", "c"),
            FilmRecord("b", "B", 2012, None, "u", "l", 19835, 300, "p", "c")]
    s = corpus_summary(recs)
    assert s["mean_upper_chars"] == 19835 and s["year_range"] == [2010, 2012]
