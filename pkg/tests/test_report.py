import csv
import io

import pytest

from scripteval import report as rpt
from scripteval.stats import descriptives, paired_test


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_table2_validity_cells():
    t = rpt.table_samples("A", "B", 159, 157, 146, 144)
    rate = next(r for r in t.rows if r[0] == "Validity Rate")
    assert rate[1:3] == ["98.7%", "91.8%"]
    assert t.rows[-1][-1] == "144 pairs"


def test_table5_difference_cell():
    res = [{"metric_name": "overall", "n_pairs": 144, "mean_a": 44.79, "mean_b": 25.72, "sd_a": 1.0, "sd_b": 1.0,
            "mean_diff": 44.79 - 25.72, "ci_low": 16.08, "ci_high": 22.06, "t_stat": 12.5,
            "p_value": 1e-12, "cohens_d": 1.04, "band": "Large"}]
    t = rpt.table_paired(res, "A", "B")
    assert t.header[3:] == ["Difference [95% CI]", "t-value", "p-value", "Cohen's d"]
    row = t.rows[0]
    assert row[3] == "+19.07 [+16.08, +22.06]"
    assert row[5] == "<0.001" and row[6] == "+1.04 (Large)"


def test_decimals_by_scale():
    assert rpt.fmt(0.21144, "unit") == "0.2114"
    assert rpt.fmt(44.791, "pct") == "44.79"


def test_empty_column_dash():
    t = rpt.table_means("T", rpt.AUTO_METRICS, "A", "B", {"rouge_l": [0.2]}, {})
    assert t.rows[0][2] == rpt.DASH and t.rows[0][3] == rpt.DASH
    assert t.rows[1][1] == rpt.DASH


def test_descriptive_table():
    t = rpt.table_descriptives("T6", "A", "B", descriptives([0.4, 0.5, 0.6]), None)
    assert dict((r[0], r[1]) for r in t.rows)["CV"] == "20.0%"
    assert all(r[2] == rpt.DASH for r in t.rows)


def test_forest_four_rows():
    res = [paired_test(m, [1.0, 2.0, 4.0, 3.0], [0.5, 1.0, 1.5, 1.0]).to_dict() for m in ("a", "b", "c", "d")]
    out = rows(rpt.to_csv(["metric", "d", "ci_low", "ci_high", "band"], rpt.forest_rows(res)))
    assert len(out) == 5
    for _, d, lo, hi, _ in out[1:]:
        assert float(lo) < float(d) < float(hi)


def test_quadrants_all_first():
    pts, counts = rpt.quadrant_rows([("f", i, 0.1 * i, 1.0 + i) for i in range(6)])
    assert counts == [["I", 6], ["II", 0], ["III", 0], ["IV", 0]]


def test_scatter_perfect_correlation():
    pts = {"A": [("f", i, r, 100 * r) for i, r in enumerate((0.1, 0.25, 0.3, 0.42))]}
    out = rpt.scatter_rows(pts)
    assert {float(r[-1]) for r in out} == {1.0}


def test_perfilm_sorted_by_abs_diff():
    out = rpt.perfilm_rows([("a", 0.5, 0.45), ("b", 0.2, 0.6), ("c", 0.9, 0.7), ("b", 0.2, 0.6)])
    assert [r[0] for r in out] == ["b", "c", "a"]
    assert out[0][1] == 2


def test_markdown_shape():
    md = rpt.Table("X", ["a", "b"], [[1, 2]]).markdown()
    assert md.splitlines()[2:] == ["| a | b |", "|---|---|", "| 1 | 2 |"]


def test_d_interval_symmetric():
    lo, hi = rpt.d_interval(0.0, 100)
    assert lo == pytest.approx(-0.196) and hi == pytest.approx(0.196)
