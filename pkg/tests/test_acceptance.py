"""One test group per acceptance criterion; the summary hook prints PASS/FAIL per number."""
import json
import math
import random
import subprocess
import sys
import time
from pathlib import Path

import pytest

from oracles.lcs_bruteforce import lcs_bruteforce
from scripteval.backends import BackendTimeout, MockBackend, envelope
from scripteval.formatting import FormatProfile, detect_profile, enum_grid, synthesize_script
from scripteval.genclient import (
    ChunkTrace, GenerationConfig, GenerationSample, Validity, classify_validity, continue_script,
    format_rate, load_blacklist, validity_rate,
)
from scripteval.metrics import composite, lcs_length, rouge_l, structural_similarity
from scripteval.report import table_samples
from scripteval.stats import (
    EffectBand, PairItem, align_pairs, cohens_d, confidence_interval, effect_band, paired_test, paired_ttest,
    shapiro_wilk,
)

ORACLE = json.loads((Path(__file__).parent / "fixtures" / "stats_oracle.json").read_text())


@pytest.mark.criterion(1)
@pytest.mark.parametrize("args, expected", [((0.2114, 0.9299, 44.79), 0.4979), ((0.2230, 0.7473, 25.72), 0.3906)])
def test_c1_composite_ground_truth(args, expected):
    # 0.39055 sits on the tolerance edge; 1e-12 absorbs binary rounding only
    assert abs(composite(*args) - expected) <= 5e-5 + 1e-12


@pytest.mark.criterion(2)
def test_c2_effect_bands_from_table():
    for d, band in ((-0.43, "Small"), (0.46, "Small"), (1.04, "Large"), (0.84, "Large")):
        assert effect_band(d).value == band


@pytest.mark.criterion(2)
def test_c2_thresholds_exact():
    cases = ((0.2, EffectBand.NEGLIGIBLE, EffectBand.SMALL), (0.5, EffectBand.SMALL, EffectBand.MEDIUM),
             (0.8, EffectBand.MEDIUM, EffectBand.LARGE))
    for edge, below, above in cases:
        for s in (1, -1):
            assert effect_band(s * (edge - 1e-9)) is below
            assert effect_band(s * edge) is above
            assert effect_band(s * (edge + 1e-9)) is above


@pytest.mark.criterion(3)
def test_c3_lcs_bruteforce_1000_pairs():
    rng = random.Random(2024)
    t0 = time.perf_counter()
    for _ in range(1000):
        a = [rng.choice("abcd") for _ in range(rng.randint(0, 12))]
        b = [rng.choice("abcd") for _ in range(rng.randint(0, 12))]
        assert lcs_length(a, b) == lcs_bruteforce(a, b)
    assert time.perf_counter() - t0 < 5


@pytest.mark.criterion(3)
def test_c3_rouge_identity_disjoint():
    x = list("剧本续写评测")
    r = rouge_l(x, x)
    assert (r.precision, r.recall, r.f1) == (1.0, 1.0, 1.0)
    r = rouge_l(list("abc"), list("xyz"))
    assert (r.precision, r.recall, r.f1) == (0.0, 0.0, 0.0)


@pytest.mark.criterion(4)
def test_c4_struct_properties():
    rng = random.Random(7)
    for _ in range(500):
        v = tuple(rng.random() for _ in range(4)) + (rng.random() * 3,)
        assert structural_similarity(v, v) == 1.0
    for _ in range(2000):
        g = tuple(rng.random() for _ in range(5))
        r = tuple(rng.random() * rng.choice((0, 1)) for _ in range(5))
        assert 0.0 <= structural_similarity(g, r) <= 1.0
    assert structural_similarity((0.5, 0, 0, 0, 0), (0, 0, 0, 0, 0)) == 0.0
    s = structural_similarity((0.1, 0.3, 0.2, 0.1, 0.1), (0.1, 0.4, 0.2, 0.1, 0.0))
    assert abs(s - 0.750) <= 1e-3


@pytest.mark.criterion(5)
def test_c5_profile_round_trip():
    grid = enum_grid()
    assert len(grid) >= 60
    t0 = time.perf_counter()
    misses = [p.key() for p in grid if detect_profile(synthesize_script(p, 60, seed=0)).key() != p.key()]
    assert misses == []
    assert time.perf_counter() - t0 < 5


@pytest.mark.criterion(6)
def test_c6_three_calls():
    backend = MockBackend(lambda r, i: envelope("字" * 4000))
    s = continue_script("a" * 20000, "Format Contract", backend)
    assert len(backend.requests) == 3 and len(s.chunk_trace) == 3


@pytest.mark.criterion(6)
def test_c6_call_bound_and_context():
    for per_call in (1, 500, 3000):
        acc = []

        def responder(req, i):
            assert req.context == "".join(acc)[-4000:]
            acc.append(chr(0x4E00 + i) * per_call)
            return envelope(acc[-1])

        backend = MockBackend(responder)
        continue_script("a" * 100000, "Format Contract", backend)
        assert len(backend.requests) <= 10


@pytest.mark.criterion(6)
@pytest.mark.parametrize("text, status, expected", [
    ("Here is the continuation\n" + "字" * 700, 200, Validity.META_DISCOURSE),
    ("字" * 750, 524, Validity.API_TIMEOUT),
    ("字" * 750, 400, Validity.API_MODERATION),
    ("字" * 750, 502, Validity.API_OTHER),
    ("字" * 750, 0, Validity.PARSE_FAILURE),
    ("字" * 599, 200, Validity.TOO_SHORT),
    ("字" * 901, 200, Validity.TOO_LONG),
    ("字" * 750, 200, Validity.VALID),
])
def test_c6_validity_taxonomy(text, status, expected):
    s = GenerationSample("m", "f", 0, text, [ChunkTrace(0, len(text), status)])
    assert classify_validity(s, 1000, GenerationConfig(), load_blacklist()) is expected


@pytest.mark.criterion(6)
def test_c6_timeout_in_loop():
    s = continue_script("a" * 5000, "Format Contract", MockBackend(lambda r, i: BackendTimeout(524)))
    assert s.validity is Validity.API_TIMEOUT


@pytest.mark.criterion(7)
def test_c7_hand_values():
    diffs = [1.0, 2.0, 3.0]
    assert cohens_d(diffs) == 2.0
    assert abs(paired_ttest(diffs)[0] - 3.4641) <= 1e-3
    lo, hi = confidence_interval(diffs)
    assert abs(lo - 0.8684) <= 1e-3 and abs(hi - 3.1316) <= 1e-3


@pytest.mark.criterion(7)
def test_c7_oracle_vectors():
    assert len(ORACLE) >= 5
    for o in ORACLE.values():
        _, p, _ = paired_ttest(o["values"])
        w, pw = shapiro_wilk(o["values"])
        assert abs(p - o["p"]) <= 1e-3
        assert abs(w - o["shapiro_w"]) <= 1e-3 and abs(pw - o["shapiro_p"]) <= 1e-3


@pytest.mark.criterion(7)
def test_c7_invariances():
    rng = random.Random(3)
    for _ in range(200):
        n = rng.randint(3, 30)
        a = [float(rng.randint(0, 100)) for _ in range(n)]
        b = [float(rng.randint(0, 100)) for _ in range(n)]
        if len({x - y for x, y in zip(a, b)}) < 2:
            continue
        c = float(rng.randint(-500, 500))
        r, shifted, swapped = (paired_test("m", a, b), paired_test("m", [x + c for x in a], [y + c for y in b]),
                               paired_test("m", b, a))
        assert (shifted.t_stat, shifted.cohens_d) == (r.t_stat, r.cohens_d)
        assert (swapped.t_stat, swapped.cohens_d) == (-r.t_stat, -r.cohens_d)


@pytest.mark.criterion(8)
def test_c8_pairing_semantics():
    space = [(f"{k // 3:02d}", k % 3) for k in range(159)]
    rng = random.Random(11)
    order = space[:]
    rng.shuffle(order)
    # 144 shared keys, 13 only valid for A, 2 only valid for B
    shared, only_a, only_b = order[:144], order[144:157], order[157:159]
    a = [PairItem(f, i, (f, i) in set(shared + only_a), True, {}) for f, i in space]
    b = [PairItem(f, i, (f, i) in set(shared + only_b), True, {}) for f, i in space]
    va, vb = sum(x.valid for x in a), sum(x.valid for x in b)
    assert (va, vb) == (157, 146)
    assert len(align_pairs(a, b)) == 144
    samples = [GenerationSample("m", f, i, validity=Validity.VALID if x.valid else Validity.TOO_SHORT)
               for x, (f, i) in zip(a, space)]
    assert format_rate(validity_rate(samples, 159)) == "98.7%"
    row = next(r for r in table_samples("A", "B", 159, va, vb, 144).rows if r[0] == "Validity Rate")
    assert row[1:3] == ["98.7%", "91.8%"]


def _run(workdir: Path) -> float:
    t0 = time.perf_counter()
    subprocess.run([sys.executable, "-m", "scripteval.cli", "run", "--workdir", str(workdir), "--run-id", "acc"],
                   check=True, capture_output=True)
    return time.perf_counter() - t0


def _tree(root: Path) -> dict:
    return {p.relative_to(root).as_posix(): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file() and p.name != "manifest.json"}


@pytest.mark.criterion(9)
def test_c9_end_to_end_smoke(tmp_path):
    elapsed = _run(tmp_path / "one")
    assert elapsed < 10, f"pipeline took {elapsed:.1f}s"
    run = tmp_path / "one" / "acc"
    for f in ("index.jsonl", "models/mock-a/samples.jsonl", "models/mock-b/verdicts.jsonl",
              "models/mock-b/scores.jsonl", "stats_report.json", "descriptives.json", "report/tables.md",
              "report/forest.csv", "report/scatter.csv", "report/quadrants.csv", "report/perfilm.csv"):
        assert (run / f).is_file(), f
    for film in ("harbor_night", "rooftop_summer", "winter_letters"):
        assert (run / "films" / film / "profile.json").is_file()
        assert (run / "films" / film / "contract.txt").is_file()

    # recompute the paired-test cells straight from the JSONL stage files
    def rows(p):
        return {(r["film_id"], r["sample_idx"]): r for r in map(json.loads, (run / p).read_text().splitlines())}

    sa, sb = rows("models/mock-a/samples.jsonl"), rows("models/mock-b/samples.jsonl")
    va, vb = rows("models/mock-a/verdicts.jsonl"), rows("models/mock-b/verdicts.jsonl")
    ca, cb = rows("models/mock-a/scores.jsonl"), rows("models/mock-b/scores.jsonl")
    keys = sorted(k for k in sa if sa[k]["validity"] == "VALID" and sb.get(k, {}).get("validity") == "VALID"
                  and va.get(k, {}).get("status") == "ok" and vb.get(k, {}).get("status") == "ok")
    report = {r["metric_name"]: r for r in json.loads((run / "stats_report.json").read_text())}
    cols = {
        "rouge_l": lambda c, v: c["rouge"]["f1"],
        "struct_sim": lambda c, v: c["struct_sim"],
        "overall": lambda c, v: v["overall_similarity_0_100"],
        "composite": lambda c, v: composite(c["rouge"]["f1"], c["struct_sim"], v["overall_similarity_0_100"]),
    }
    for name, get in cols.items():
        ref = paired_test(name, [get(ca[k], va[k]) for k in keys], [get(cb[k], vb[k]) for k in keys])
        assert report[name]["n_pairs"] == len(keys)
        for field in ("mean_a", "mean_b", "mean_diff", "ci_low", "ci_high", "t_stat", "p_value", "cohens_d"):
            a, b = report[name][field], getattr(ref, field)
            assert (a is None and b is None) or math.isclose(a, b, rel_tol=0, abs_tol=1e-12), (name, field)

    _run(tmp_path / "two")
    assert _tree(run) == _tree(tmp_path / "two" / "acc")
