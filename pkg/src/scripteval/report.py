"""Publication-style tables (markdown + CSV) and plot-ready CSV data."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .genclient import format_rate
from .stats import Descriptives, descriptives, format_p

DASH = "—"

# (key, label, scale) where scale "unit" is [0, 1] and "pct" is 0-100
CORE_METRICS = (
    ("rouge_l", "ROUGE-L", "unit"),
    ("struct_sim", "Structural Sim.", "unit"),
    ("overall", "Overall Score", "pct"),
    ("composite", "Composite Score", "unit"),
)
AUTO_METRICS = CORE_METRICS[:2]
JUDGE_DIMENSIONS = (
    ("overall", "Overall Score", "pct"),
    ("plot_event_alignment", "Plot Alignment", "pct"),
    ("character_consistency", "Character Consistency", "pct"),
    ("tone_style_match", "Tone-Style Match", "pct"),
    ("format_match", "Format Match", "pct"),
    ("ending_closure", "Ending Closure", "pct"),
)


def _dec(scale: str) -> int:
    return 4 if scale == "unit" else 2


def fmt(x: Optional[float], scale: str = "unit", signed: bool = False) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return DASH
    spec = f"{'+' if signed else ''}.{_dec(scale)}f"
    return format(x, spec)


def fmt_mean_sd(values: Sequence[float], scale: str) -> str:
    if not values:
        return DASH
    d = descriptives(values)
    return f"{fmt(d.mean, scale)}±{fmt(d.sd, scale)}"


def diff_cell(mean_diff, lo, hi, scale: str) -> str:
    if mean_diff is None:
        return DASH
    if lo is None:
        return fmt(mean_diff, scale, True)
    return f"{fmt(mean_diff, scale, True)} [{fmt(lo, scale, True)}, {fmt(hi, scale, True)}]"


def d_cell(d, band) -> str:
    if d is None:
        return DASH
    return f"{d:+.2f} ({band})"


@dataclass
class Table:
    title: str
    header: list
    rows: list = field(default_factory=list)

    def markdown(self) -> str:
        lines = [f"### {self.title}", "", "| " + " | ".join(self.header) + " |",
                 "|" + "|".join("---" for _ in self.header) + "|"]
        lines += ["| " + " | ".join(str(c) for c in r) + " |" for r in self.rows]
        return "\n".join(lines) + "\n"

    def csv(self) -> str:
        return to_csv(self.header, self.rows)


def to_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def num(x: Optional[float]) -> str:
    """Plot-data number format."""
    if x is None:
        return ""
    return f"{x:.6f}"


# --- tables ----------------------------------------------------------------

def table_samples(model_a: str, model_b: str, theoretical: int, valid_a: int, valid_b: int, n_pairs: int) -> Table:
    """Sample counts, validity rates and pair count."""
    t = Table("Sample Collection Statistics", ["Metric", model_a, model_b, "Total"])
    total_theory = 2 * theoretical
    t.rows.append(["Theoretical Samples", theoretical, theoretical, total_theory])
    t.rows.append(["Valid Samples", valid_a, valid_b, valid_a + valid_b])
    if theoretical > 0:
        t.rows.append([
            "Validity Rate",
            format_rate(valid_a / theoretical),
            format_rate(valid_b / theoretical),
            format_rate((valid_a + valid_b) / total_theory),
        ])
    else:
        t.rows.append(["Validity Rate", DASH, DASH, DASH])
    t.rows.append(["Paired Samples", n_pairs, n_pairs, f"{n_pairs} pairs"])
    return t


def table_means(title: str, metrics, model_a: str, model_b: str, values_a: dict, values_b: dict) -> Table:
    """Mean±sd per metric per model plus the difference of means."""
    na = max((len(values_a.get(k, [])) for k, _, _ in metrics), default=0)
    nb = max((len(values_b.get(k, [])) for k, _, _ in metrics), default=0)
    t = Table(title, ["Metric", f"{model_a} (n={na})", f"{model_b} (n={nb})", "Difference"])
    for key, label, scale in metrics:
        va, vb = values_a.get(key, []), values_b.get(key, [])
        diff = float(np.mean(va) - np.mean(vb)) if va and vb else None
        t.rows.append([label, fmt_mean_sd(va, scale), fmt_mean_sd(vb, scale), fmt(diff, scale, True)])
    return t


def table_paired(results: Sequence[dict], model_a: str, model_b: str) -> Table:
    n = results[0]["n_pairs"] if results else 0
    t = Table(
        f"Paired t-test Results (n={n} pairs)",
        ["Metric", model_a, model_b, "Difference [95% CI]", "t-value", "p-value", "Cohen's d"],
    )
    scales = {k: (label, s) for k, label, s in CORE_METRICS}
    for r in results:
        label, scale = scales.get(r["metric_name"], (r["metric_name"], "unit"))
        a = f"{fmt(r['mean_a'], scale)}±{fmt(r['sd_a'], scale)}" if r.get("sd_a") is not None else fmt(r.get("mean_a"), scale)
        b = f"{fmt(r['mean_b'], scale)}±{fmt(r['sd_b'], scale)}" if r.get("sd_b") is not None else fmt(r.get("mean_b"), scale)
        t.rows.append([
            label,
            a,
            b,
            diff_cell(r.get("mean_diff"), r.get("ci_low"), r.get("ci_high"), scale),
            DASH if r.get("t_stat") is None else f"{r['t_stat']:.2f}",
            format_p(r.get("p_value")),
            d_cell(r.get("cohens_d"), r.get("band")),
        ])
    return t


def table_descriptives(title: str, model_a: str, model_b: str, da: Optional[Descriptives], db: Optional[Descriptives]) -> Table:
    t = Table(title, ["Statistic", model_a, model_b])

    def cell(d, attr):
        if d is None:
            return DASH
        v = getattr(d, attr)
        if attr == "cv":
            return DASH if v is None else f"{v:.1f}%"
        return fmt(v, "unit")

    for label, attr in (("Mean", "mean"), ("Std Dev", "sd"), ("Minimum", "min"),
                        ("Maximum", "max"), ("IQR", "iqr"), ("CV", "cv")):
        t.rows.append([label, cell(da, attr), cell(db, attr)])
    return t


# --- plot data -------------------------------------------------------------

def d_interval(d: float, n: int, z: float = 1.96) -> tuple[float, float]:
    """Approximate CI of a paired-sample d from its large-sample standard error."""
    se = math.sqrt(1.0 / n + d * d / (2.0 * n))
    return d - z * se, d + z * se


def forest_rows(results: Sequence[dict]) -> list[list]:
    rows = []
    for r in results:
        d = r.get("cohens_d")
        if d is None:
            continue
        lo, hi = d_interval(d, r["n_pairs"])
        rows.append([r["metric_name"], num(d), num(lo), num(hi), r["band"]])
    return rows


def pearson(x: Sequence[float], y: Sequence[float]) -> Optional[float]:
    if len(x) < 2:
        return None
    xa, ya = np.asarray(x, float), np.asarray(y, float)
    sx, sy = xa.std(), ya.std()
    if sx == 0 or sy == 0:
        return None
    r = float(((xa - xa.mean()) * (ya - ya.mean())).mean() / (sx * sy))
    return max(-1.0, min(1.0, r))


def scatter_rows(points: dict) -> list[list]:
    """``points`` maps model -> list of (film_id, sample_idx, rouge_f1, overall)."""
    rows = []
    for model in sorted(points):
        pts = points[model]
        r = pearson([p[2] for p in pts], [p[3] for p in pts])
        for film_id, idx, rouge, overall in pts:
            rows.append([model, film_id, idx, num(rouge), num(overall), num(r)])
    return rows


def quadrant(dx: float, dy: float) -> str:
    if dx >= 0 and dy >= 0:
        return "I"
    if dx < 0 and dy >= 0:
        return "II"
    if dx < 0 and dy < 0:
        return "III"
    return "IV"


def quadrant_rows(pairs: Sequence[tuple]) -> tuple[list[list], list[list]]:
    """``pairs`` holds (film_id, sample_idx, d_rouge, d_overall)."""
    points, counts = [], {"I": 0, "II": 0, "III": 0, "IV": 0}
    for film_id, idx, dx, dy in pairs:
        q = quadrant(dx, dy)
        counts[q] += 1
        points.append([film_id, idx, num(dx), num(dy), q])
    return points, [[q, c] for q, c in counts.items()]


def perfilm_rows(pairs: Sequence[tuple]) -> list[list]:
    """``pairs`` holds (film_id, struct_a, struct_b); one row per film, largest |diff| first."""
    by_film: dict = {}
    for film_id, a, b in pairs:
        by_film.setdefault(film_id, []).append((a, b))
    rows = []
    for film_id, vals in by_film.items():
        ma = float(np.mean([v[0] for v in vals]))
        mb = float(np.mean([v[1] for v in vals]))
        rows.append((film_id, len(vals), ma, mb, ma - mb))
    rows.sort(key=lambda r: (-abs(r[4]), r[0]))
    return [[f, n, num(a), num(b), num(d)] for f, n, a, b, d in rows]
