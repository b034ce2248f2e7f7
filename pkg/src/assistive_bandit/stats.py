"""Group summaries, one-way ANOVA and Tukey HSD for comparing agents' returns.

The F-distribution tail is evaluated through the regularized incomplete
beta function (Lentz continued fraction). Tukey p-values come from a
seeded Monte Carlo sample of the null studentized-range distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

BETACF_TOL = 1e-15
BETACF_MAX_ITER = 10_000


@dataclass(frozen=True)
class GroupSummary:
    name: str
    n: int
    mean: float
    std: float


@dataclass(frozen=True)
class AnovaResult:
    f_statistic: float
    df_between: int
    df_within: int
    p_value: float
    degenerate: bool = False


@dataclass(frozen=True)
class TukeyPair:
    group_i: str
    group_j: str
    mean_diff: float
    q_statistic: float
    p_value: float
    reject_at_05: bool


@dataclass
class TukeyResult:
    pairs: list[TukeyPair] = field(default_factory=list)

    def pair(self, a: str, b: str) -> TukeyPair:
        for p in self.pairs:
            if {p.group_i, p.group_j} == {a, b}:
                return p
        raise KeyError((a, b))


def summarize(name: str, samples: Sequence[float]) -> GroupSummary:
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two samples")
    return GroupSummary(name, int(x.size), float(x.mean()), float(x.std(ddof=1)))


# ---------------------------------------------------------------------------
# incomplete beta / F distribution


def _log_beta(a: float, b: float) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for I_x(a, b), modified Lentz's method."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > tiny else tiny)
    h = d
    for m in range(1, BETACF_MAX_ITER + 1):
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
        if abs(delta - 1.0) < BETACF_TOL:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def regularized_beta(x: float, a: float, b: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    front = math.exp(a * math.log(x) + b * math.log1p(-x) - _log_beta(a, b))
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def f_sf(f: float, d1: float, d2: float) -> float:
    """Upper tail P(F > f) of the F(d1, d2) distribution."""
    if f <= 0:
        return 1.0
    if math.isinf(f):
        return 0.0
    # P(F > f) = I_{d2/(d2 + d1 f)}(d2/2, d1/2)
    return min(1.0, max(0.0, regularized_beta(d2 / (d2 + d1 * f), d2 / 2.0, d1 / 2.0)))


# ---------------------------------------------------------------------------
# ANOVA


def _decompose(groups: Sequence[Sequence[float]]):
    arrays = [np.asarray(g, dtype=float) for g in groups]
    if len(arrays) < 2:
        raise ValueError("need at least two groups")
    if any(a.size < 2 for a in arrays):
        raise ValueError("each group needs at least two samples")
    grand = np.concatenate(arrays).mean()
    ss_between = sum(a.size * (a.mean() - grand) ** 2 for a in arrays)
    ss_within = sum(((a - a.mean()) ** 2).sum() for a in arrays)
    df_between = len(arrays) - 1
    df_within = sum(a.size for a in arrays) - len(arrays)
    return arrays, float(ss_between), float(ss_within), df_between, df_within


def one_way_anova(groups: Sequence[Sequence[float]]) -> AnovaResult:
    _, ssb, ssw, dfb, dfw = _decompose(groups)
    msb, msw = ssb / dfb, ssw / dfw
    if msw == 0.0:
        if msb == 0.0:
            return AnovaResult(0.0, dfb, dfw, 1.0)
        return AnovaResult(math.inf, dfb, dfw, 0.0, degenerate=True)
    f = msb / msw
    return AnovaResult(f, dfb, dfw, f_sf(f, dfb, dfw))


# ---------------------------------------------------------------------------
# Tukey HSD


def studentized_range_null(k: int, df: float, draws: int, seed: int) -> np.ndarray:
    """Sorted Monte Carlo sample of the studentized range of ``k`` means with ``df`` d.o.f."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((draws, k))
    s = np.sqrt(rng.chisquare(df, size=draws) / df)
    q = (z.max(axis=1) - z.min(axis=1)) / s
    q.sort()
    return q


def studentized_range_sf(q: float, k: int, df: float, draws: int = 200_000, seed: int = 0,
                         null: np.ndarray | None = None) -> float:
    """Monte Carlo estimate of P(Q > q)."""
    null = studentized_range_null(k, df, draws, seed) if null is None else null
    return float(null.size - np.searchsorted(null, q, side="right")) / null.size


def tukey_hsd(groups: Sequence[Sequence[float]], alpha: float = 0.05, mc_draws: int = 200_000,
              seed: int = 0, names: Sequence[str] | None = None) -> TukeyResult:
    arrays, _, ssw, _, dfw = _decompose(groups)
    names = list(names) if names is not None else [str(i) for i in range(len(arrays))]
    msw = ssw / dfw
    null = studentized_range_null(len(arrays), dfw, mc_draws, seed) if msw > 0 else None
    pairs = []
    for i, j in combinations(range(len(arrays)), 2):
        a, b = arrays[i], arrays[j]
        diff = float(b.mean() - a.mean())
        if msw > 0:
            q = abs(diff) / math.sqrt(msw / 2.0 * (1.0 / a.size + 1.0 / b.size))
            p = studentized_range_sf(q, len(arrays), dfw, null=null)
        else:
            q = math.inf if diff != 0 else 0.0
            p = 0.0 if diff != 0 else 1.0
        pairs.append(TukeyPair(names[i], names[j], diff, q, p, p < alpha))
    return TukeyResult(pairs)
