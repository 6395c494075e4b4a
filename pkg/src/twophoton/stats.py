"""Levene's test for equal variances with an exact F-distribution p-value."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

_CF_EPS = 1e-16
_CF_TINY = 1e-300
_CF_MAX_ITER = 100_000


def _betacf(x: float, a: float, b: float) -> float:
    """Continued fraction for I_x(a, b) by the modified Lentz method."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (x={x}, a={a}, b={b})")


def _stirling_tail(z: float) -> float:
    """lgamma(z) minus its leading Stirling terms; accurate to ~1e-17 for z >= 20."""
    z2 = z * z
    return (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - 1.0 / (1680.0 * z2)) / z2) / z2) / z


def _log_beta(a: float, b: float) -> float:
    small, big = min(a, b), max(a, b)
    if big < 20.0:
        return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    # lgamma(small + big) - lgamma(big) without cancelling two huge numbers
    ratio = ((big - 0.5) * math.log1p(small / big) + small * math.log(small + big) - small
             + _stirling_tail(small + big) - _stirling_tail(big))
    return math.lgamma(small) - ratio


def _ibeta(x: float, y: float, a: float, b: float) -> float:
    """I_x(a, b) with ``y = 1 - x`` supplied separately to avoid rounding it."""
    if x == 0.0:
        return 0.0
    if y == 0.0:
        return 1.0
    log_front = a * math.log(x) + b * math.log(y) - _log_beta(a, b)
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _betacf(x, a, b) / a
    return 1.0 - math.exp(log_front) * _betacf(y, b, a) / b


def regularized_incomplete_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta function ``I_x(a, b)``.

    Uses the continued fraction directly for ``x < (a+1)/(a+b+2)`` and the
    reflection ``1 - I_{1-x}(b, a)`` above it, where the fraction converges fast.
    """
    if not (a > 0 and b > 0) or not math.isfinite(a) or not math.isfinite(b):
        raise ValueError(f"a and b must be finite and > 0, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    return _ibeta(x, 1.0 - x, a, b)


def _check_f_args(x, d1, d2):
    if not x >= 0:
        raise ValueError(f"F quantile must be >= 0, got {x}")
    if not (d1 >= 1 and d2 >= 1):
        raise ValueError(f"degrees of freedom must be >= 1, got ({d1}, {d2})")


def f_cdf(x: float, d1: float, d2: float) -> float:
    """P(F(d1, d2) <= x)."""
    _check_f_args(x, d1, d2)
    if math.isinf(x):
        return 1.0
    denom = d1 * x + d2
    return _ibeta(d1 * x / denom, d2 / denom, d1 / 2.0, d2 / 2.0)


def f_sf(x: float, d1: float, d2: float) -> float:
    """Upper tail P(F(d1, d2) > x), evaluated without cancellation."""
    _check_f_args(x, d1, d2)
    if math.isinf(x):
        return 0.0
    denom = d1 * x + d2
    return _ibeta(d2 / denom, d1 * x / denom, d2 / 2.0, d1 / 2.0)


@dataclass(frozen=True)
class LeveneReport:
    W: float
    df1: int
    df2: int
    p_value: float
    center: str
    group_z_means: tuple[float, ...]
    grand_z_mean: float
    group_sizes: tuple[int, ...] = ()

    def to_json(self) -> dict:
        """Compact form: statistic, degrees of freedom, p-value and centring."""
        w = self.W if math.isfinite(self.W) else None
        return {"W": w, "df1": self.df1, "df2": self.df2, "p_value": self.p_value, "center": self.center}

    def to_dict(self) -> dict:
        d = asdict(self)
        d["group_z_means"] = list(self.group_z_means)
        d["group_sizes"] = list(self.group_sizes)
        return d


def levene(groups: Sequence[Sequence[float]], center: str = "mean") -> LeveneReport:
    """Levene's test across ``k >= 2`` groups.

    Parameters
    ----------
    groups : sequence of 1-D array-like
        Each group needs at least two finite values.
    center : {"mean", "median"}
        Group centre subtracted before taking absolute deviations. ``"median"``
        gives the Brown-Forsythe variant.

    Returns
    -------
    LeveneReport
        ``W`` with ``df1 = k - 1``, ``df2 = N - k`` and the upper-tail p-value.
        When every deviation equals its group mean deviation and the group
        means coincide, ``W = 0`` and ``p = 1``.
    """
    if center not in ("mean", "median"):
        raise ValueError(f"center must be 'mean' or 'median', got {center!r}")
    arrays = [np.asarray(g, dtype=np.float64).ravel() for g in groups]
    k = len(arrays)
    if k < 2:
        raise ValueError(f"need at least 2 groups, got {k}")
    for i, g in enumerate(arrays):
        if g.size < 2:
            raise ValueError(f"group {i} has {g.size} samples; at least 2 required")
        if not np.all(np.isfinite(g)):
            raise ValueError(f"group {i} contains non-finite values")

    centre = np.mean if center == "mean" else np.median
    z = [np.abs(g - centre(g)) for g in arrays]
    sizes = np.array([g.size for g in arrays])
    n_total = int(sizes.sum())
    z_means = np.array([zi.mean() for zi in z])
    grand = float(np.concatenate(z).mean())

    if np.all(z_means == z_means[0]):
        # equal group means: the grand mean can differ from them by rounding only
        between = 0.0
    else:
        between = float(np.sum(sizes * (z_means - grand) ** 2))
    within = float(sum(np.sum((zi - zm) ** 2) for zi, zm in zip(z, z_means)))
    df1, df2 = k - 1, n_total - k

    if within == 0.0:
        if between == 0.0:
            w, p = 0.0, 1.0
        else:
            w, p = math.inf, 0.0
    else:
        w = (df2 / df1) * between / within
        p = min(1.0, max(0.0, f_sf(w, df1, df2)))
    return LeveneReport(w, df1, df2, p, center, tuple(float(v) for v in z_means), grand, tuple(int(s) for s in sizes))
