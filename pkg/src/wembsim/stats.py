"""Correlation, significance and accuracy statistics for metric evaluation."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

_TINY = 1e-300
_CF_EPS = 1e-12
_CF_MAX_ITER = 10_000


class UndefinedCorrelationError(ValueError):
    """Correlation requested for an input with zero variance."""


def _betacf(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the incomplete beta continued fraction
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _betacf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _betacf(b, a, 1.0 - x) / b


def t_two_sided_pvalue(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if math.isinf(t):
        return 0.0
    return betainc(df / 2.0, 0.5, df / (df + t * t))


def correlation_pvalue(r: float, n: int) -> float:
    """Two-tailed p-value of a correlation coefficient via the t statistic."""
    if abs(r) >= 1.0:
        return 0.0
    df = n - 2
    t = r * math.sqrt(df / (1.0 - r * r))
    return t_two_sided_pvalue(t, df)


@dataclass(frozen=True)
class PairedSamples:
    xs: np.ndarray
    ys: np.ndarray
    labels: Optional[List[str]] = None

    def __init__(self, xs, ys, labels=None):
        xs = np.asarray(xs, dtype=np.float64)
        ys = np.asarray(ys, dtype=np.float64)
        if xs.ndim != 1 or xs.shape != ys.shape:
            raise ValueError("xs and ys must be 1-d and of equal length")
        if xs.size < 3:
            raise ValueError("at least 3 paired samples are required")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise ValueError("samples must be finite")
        if labels is not None and len(labels) != xs.size:
            raise ValueError("labels must match the sample count")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "labels", list(labels) if labels is not None else None)

    def __len__(self):
        return self.xs.size


@dataclass(frozen=True)
class CorrelationResult:
    coefficient: float
    p_value: float
    n: int


# |r| this close to 1 is treated as an exact linear relation
_EXACT_R = 1e-13


def _pearson_r(x: np.ndarray, y: np.ndarray) -> float:
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("correlation is undefined for a constant input")
    r = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    if abs(r) > 1.0 - _EXACT_R:
        r = math.copysign(1.0, r)
    return r


def pearson(samples: PairedSamples) -> CorrelationResult:
    r = _pearson_r(samples.xs, samples.ys)
    return CorrelationResult(r, correlation_pvalue(r, len(samples)), len(samples))


def rank_average(values: Sequence[float]) -> np.ndarray:
    """1-based ranks; tied values share the mean of their positions."""
    v = np.asarray(values, dtype=np.float64)
    order = np.argsort(v, kind="mergesort")
    ranks = np.empty(v.size)
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and v[order[j + 1]] == v[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(samples: PairedSamples) -> CorrelationResult:
    rho = _pearson_r(rank_average(samples.xs), rank_average(samples.ys))
    return CorrelationResult(rho, correlation_pvalue(rho, len(samples)), len(samples))


class Preference(enum.Enum):
    A = "A"
    B = "B"


@dataclass(frozen=True)
class PreferencePair:
    score_a: float
    score_b: float
    human_prefers: Preference


@dataclass(frozen=True)
class AccuracyResult:
    accuracy: float
    ties: int
    correct: int
    n: int


def pairwise_accuracy(pairs: Sequence[PreferencePair]) -> AccuracyResult:
    """Fraction of pairs where the metric strictly prefers the human choice.

    Exact ties are counted as wrong and reported in ``ties``.
    """
    if not pairs:
        raise ValueError("pairwise_accuracy needs at least one pair")
    correct = ties = 0
    for p in pairs:
        if p.score_a == p.score_b:
            ties += 1
            continue
        metric_prefers = Preference.A if p.score_a > p.score_b else Preference.B
        correct += metric_prefers == Preference(p.human_prefers)
    return AccuracyResult(correct / len(pairs), ties, correct, len(pairs))


def forced_choice_accuracy(instances: Sequence[Tuple[float, float]]) -> AccuracyResult:
    """Fraction of (correct, distractor) score pairs with correct > distractor."""
    if not instances:
        raise ValueError("forced_choice_accuracy needs at least one instance")
    correct = sum(1 for good, bad in instances if good > bad)
    ties = sum(1 for good, bad in instances if good == bad)
    return AccuracyResult(correct / len(instances), ties, correct, len(instances))


@dataclass(frozen=True)
class CorrelationMatrix:
    """Spearman matrix; undefined cells hold NaN."""

    names: List[str]
    values: np.ndarray = field(repr=False)

    def __getitem__(self, key):
        a, b = key
        return self.values[self.names.index(a), self.names.index(b)]


def correlation_matrix(metric_scores: Mapping[str, Sequence[float]]) -> CorrelationMatrix:
    names = list(metric_scores)
    lengths = {len(metric_scores[m]) for m in names}
    if len(lengths) > 1:
        raise ValueError("all metric vectors must have the same length")
    if names and lengths.pop() < 3:
        raise ValueError("at least 3 systems are required")
    k = len(names)
    out = np.full((k, k), np.nan)
    for i in range(k):
        for j in range(i, k):
            try:
                rho = spearman(PairedSamples(metric_scores[names[i]], metric_scores[names[j]])).coefficient
            except UndefinedCorrelationError:
                continue
            out[i, j] = out[j, i] = rho
    return CorrelationMatrix(names, out)


NORMALIZATIONS = ("minmax", "zscore", "none")


def normalize(v: Sequence[float], mode: str) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if mode == "none":
        return v.copy()
    if mode == "minmax":
        lo, hi = v.min(), v.max()
        if hi == lo:
            raise ValueError("min-max normalization of a constant vector")
        return (v - lo) / (hi - lo)
    if mode == "zscore":
        sd = v.std()
        if sd == 0.0:
            raise ValueError("z-score normalization of a constant vector")
        return (v - v.mean()) / sd
    raise ValueError(f"unknown normalization {mode!r}; expected one of {NORMALIZATIONS}")


def combine_scores(a: Sequence[float], b: Sequence[float], normalization: str = "minmax") -> np.ndarray:
    """Normalize each vector independently, then add them element-wise."""
    if len(a) != len(b):
        raise ValueError("score vectors must have equal length")
    return normalize(a, normalization) + normalize(b, normalization)


def summarize_categories(results: Dict[str, AccuracyResult]) -> float:
    """Unweighted mean of per-category accuracies."""
    return sum(r.accuracy for r in results.values()) / len(results)
