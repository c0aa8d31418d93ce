"""Paired comparison statistics: pairing, descriptives, t-test, Cohen's d,
confidence intervals and the Shapiro-Wilk normality check."""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from enum import Enum
from statistics import NormalDist
from typing import Hashable, Iterable, Optional, Sequence

import numpy as np

Z_95 = 1.96
_NORMAL = NormalDist()


class EffectBand(str, Enum):
    NEGLIGIBLE = "Negligible"
    SMALL = "Small"
    MEDIUM = "Medium"
    LARGE = "Large"


class ZeroVarianceError(ValueError):
    """Differences have zero spread, so t and d are undefined."""


# --- pairing ---------------------------------------------------------------

@dataclass
class PairItem:
    """One scored sample of one model, as seen by the pairing step."""

    film_id: str
    sample_idx: int
    valid: bool = True
    judged: bool = True
    metrics: dict = field(default_factory=dict)

    @property
    def key(self) -> tuple[str, int]:
        return (self.film_id, self.sample_idx)


def _index(items: Iterable[PairItem], label: str) -> dict:
    out = {}
    for it in items:
        if it.key in out:
            raise ValueError(f"duplicate key {it.key} in model {label}")
        out[it.key] = it
    return out


def align_pairs(samples_a: Sequence[PairItem], samples_b: Sequence[PairItem]) -> list[tuple[PairItem, PairItem]]:
    """Inner join on (film_id, sample_idx) over valid, judged samples."""
    ia, ib = _index(samples_a, "A"), _index(samples_b, "B")
    keys = sorted(
        k for k in ia.keys() & ib.keys()
        if ia[k].valid and ia[k].judged and ib[k].valid and ib[k].judged
    )
    return [(ia[k], ib[k]) for k in keys]


# --- descriptives ----------------------------------------------------------

@dataclass
class Descriptives:
    n: int
    mean: float
    sd: float
    min: float
    max: float
    iqr: float
    cv: Optional[float]  # percent; None when the mean is 0

    def to_dict(self) -> dict:
        return asdict(self)


def descriptives(values: Sequence[float]) -> Descriptives:
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise ValueError("descriptives of an empty list")
    mean = float(x.mean())
    sd = float(x.std(ddof=1)) if x.size > 1 else 0.0
    q1, q3 = np.percentile(x, [25, 75])
    cv = None if mean == 0 else 100.0 * sd / abs(mean)
    return Descriptives(int(x.size), mean, sd, float(x.min()), float(x.max()), float(q3 - q1), cv)


# --- effect size, t-test, CI -----------------------------------------------

def _mean_sd(diffs: Sequence[float]) -> tuple[float, float, int]:
    x = np.asarray(diffs, dtype=float)
    if x.size < 2:
        raise ValueError(f"need at least 2 paired differences, got {x.size}")
    return float(x.mean()), float(x.std(ddof=1)), int(x.size)


def cohens_d(diffs: Sequence[float]) -> float:
    """mean(diffs) / sd(diffs); positive means the first model scored higher."""
    mean, sd, _ = _mean_sd(diffs)
    if sd == 0:
        raise ZeroVarianceError("Cohen's d undefined: zero variance of differences")
    return mean / sd


def effect_band(d: float) -> EffectBand:
    a = abs(d)
    if a < 0.2:
        return EffectBand.NEGLIGIBLE
    if a < 0.5:
        return EffectBand.SMALL
    if a < 0.8:
        return EffectBand.MEDIUM
    return EffectBand.LARGE


def _betacf(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the incomplete-beta continued fraction
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c, d = 1.0, 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > tiny else tiny)
    h = d
    for m in range(1, 10000):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            break
    return h


def betainc(a: float, b: float, x: float) -> float:
    """Regularised incomplete beta function I_x(a, b)."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must be in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if math.isinf(t):
        return 0.0
    return min(1.0, betainc(df / 2.0, 0.5, df / (df + t * t)))


def t_critical(df: float, alpha: float = 0.05) -> float:
    lo, hi = 0.0, 1.0
    while t_two_sided_p(hi, df) > alpha:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if t_two_sided_p(mid, df) > alpha:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def paired_ttest(diffs: Sequence[float]) -> tuple[float, float, int]:
    """(t, two-sided p, df) of the one-sample t-test on paired differences."""
    mean, sd, n = _mean_sd(diffs)
    if sd == 0:
        raise ZeroVarianceError("t-test undefined: zero variance of differences")
    t = mean / (sd / math.sqrt(n))
    return t, t_two_sided_p(t, n - 1), n - 1


def confidence_interval(diffs: Sequence[float], z: float = Z_95) -> tuple[float, float]:
    """mean ± z * sd / sqrt(n), with the normal multiplier 1.96 by default."""
    mean, sd, n = _mean_sd(diffs)
    half = z * sd / math.sqrt(n)
    return mean - half, mean + half


def t_confidence_interval(diffs: Sequence[float], alpha: float = 0.05) -> tuple[float, float]:
    mean, sd, n = _mean_sd(diffs)
    half = t_critical(n - 1, alpha) * sd / math.sqrt(n)
    return mean - half, mean + half


def format_p(p: Optional[float]) -> str:
    if p is None:
        return "—"
    return "<0.001" if p < 1e-3 else f"{p:.3f}"


# --- Shapiro-Wilk (Royston 1995) -------------------------------------------

def _poly(coefs: Sequence[float], x: float) -> float:
    # coefficients in increasing order of power
    return sum(c * x ** i for i, c in enumerate(coefs))


def shapiro_wilk(values: Sequence[float]) -> tuple[float, float]:
    """W statistic and approximate p-value, valid for 3 <= n <= 5000."""
    x = np.sort(np.asarray(values, dtype=float))
    n = x.size
    if not 3 <= n <= 5000:
        raise ValueError(f"Shapiro-Wilk needs 3 <= n <= 5000, got {n}")
    rng = x[-1] - x[0]
    if rng < 1e-19 * max(1.0, abs(x[0])):
        raise ZeroVarianceError("Shapiro-Wilk undefined for constant data")

    if n == 3:
        a = np.array([-math.sqrt(0.5), 0.0, math.sqrt(0.5)])
    else:
        m = np.array([_NORMAL.inv_cdf((i - 0.375) / (n + 0.25)) for i in range(1, n + 1)])
        summ2 = float(m @ m)
        u = 1.0 / math.sqrt(n)
        an = m[-1] / math.sqrt(summ2) + _poly([0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056], u)
        a = m / 1.0
        if n > 5:
            an1 = m[-2] / math.sqrt(summ2) + _poly([0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633], u)
            phi = (summ2 - 2 * m[-1] ** 2 - 2 * m[-2] ** 2) / (1 - 2 * an ** 2 - 2 * an1 ** 2)
            a = m / math.sqrt(phi)
            a[-1], a[-2], a[0], a[1] = an, an1, -an, -an1
        else:
            phi = (summ2 - 2 * m[-1] ** 2) / (1 - 2 * an ** 2)
            a = m / math.sqrt(phi)
            a[-1], a[0] = an, -an

    xc = (x - x.mean()) / rng
    w = float((a @ xc) ** 2 / (xc @ xc))
    w = min(w, 1.0)

    if n == 3:
        p = (6.0 / math.pi) * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75)))
        return w, max(0.0, min(1.0, p))

    w1 = 1.0 - w
    if w1 <= 0.0:
        return w, 1.0
    if n <= 11:
        gamma = 0.459 * n - 2.273
        y = math.log(w1)
        if y >= gamma:
            return w, 1e-19
        y = -math.log(gamma - y)
        mu = _poly([0.5440, -0.39978, 0.025054, -0.0006714], n)
        sigma = math.exp(_poly([1.3822, -0.77857, 0.062767, -0.0020322], n))
    else:
        ln_n = math.log(n)
        y = math.log(w1)
        mu = _poly([-1.5861, -0.31082, -0.083751, 0.0038915], ln_n)
        sigma = math.exp(_poly([-0.4803, -0.082676, 0.0030302], ln_n))
    z = (y - mu) / sigma
    return w, 1.0 - _NORMAL.cdf(z)


# --- paired comparison -----------------------------------------------------

@dataclass
class PairedTestResult:
    metric_name: str
    n_pairs: int
    mean_a: Optional[float] = None
    mean_b: Optional[float] = None
    sd_a: Optional[float] = None
    sd_b: Optional[float] = None
    mean_diff: Optional[float] = None
    sd_diff: Optional[float] = None
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None
    t_ci_low: Optional[float] = None
    t_ci_high: Optional[float] = None
    t_stat: Optional[float] = None
    df: Optional[int] = None
    p_value: Optional[float] = None
    cohens_d: Optional[float] = None
    band: Optional[str] = None
    shapiro_w: Optional[float] = None
    shapiro_p: Optional[float] = None
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PairedTestResult":
        return cls(**d)


def paired_test(metric_name: str, a: Sequence[float], b: Sequence[float]) -> PairedTestResult:
    """Full paired comparison of one metric; a and b are aligned columns."""
    if len(a) != len(b):
        raise ValueError("paired columns differ in length")
    n = len(a)
    res = PairedTestResult(metric_name, n)
    if n == 0:
        return res
    xa, xb = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    diffs = xa - xb
    res.mean_a, res.mean_b = float(xa.mean()), float(xb.mean())
    res.mean_diff = float(diffs.mean())
    if n < 2:
        res.warnings.append("fewer than 2 pairs: no test")
        return res
    res.sd_a, res.sd_b = float(xa.std(ddof=1)), float(xb.std(ddof=1))
    res.sd_diff = float(diffs.std(ddof=1))
    res.ci_low, res.ci_high = confidence_interval(diffs)
    if res.sd_diff == 0:
        res.warnings.append("zero variance of differences: t and d undefined")
        return res
    res.t_ci_low, res.t_ci_high = t_confidence_interval(diffs)
    res.t_stat, res.p_value, res.df = paired_ttest(diffs)
    res.cohens_d = cohens_d(diffs)
    res.band = effect_band(res.cohens_d).value
    if n >= 3:
        try:
            res.shapiro_w, res.shapiro_p = shapiro_wilk(diffs)
        except ZeroVarianceError:
            pass
        if res.shapiro_p is not None and res.shapiro_p < 0.05:
            msg = f"{metric_name}: differences deviate from normality (Shapiro-Wilk p={res.shapiro_p:.3g})"
            res.warnings.append(msg)
            warnings.warn(msg, stacklevel=2)
    return res
