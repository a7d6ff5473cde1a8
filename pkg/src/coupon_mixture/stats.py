"""Standard Gumbel law and the one-sample Kolmogorov-Smirnov distance."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = ["KS_CRITICAL", "GumbelStandard", "KSResult", "empirical_cdf", "gumbel_cdf", "ks_statistic"]

# Asymptotic two-sided constants c_alpha with critical value c_alpha / sqrt(n).
KS_CRITICAL = {0.10: 1.22, 0.05: 1.36, 0.01: 1.63}


def gumbel_cdf(y):
    """exp(-exp(-y)); accepts scalars or arrays."""
    if np.ndim(y) == 0:
        y = float(y)
        if y == -math.inf:
            return 0.0
        if y > 745:
            return 1.0
        return math.exp(-math.exp(-y)) if y > -709 else 0.0
    with np.errstate(over="ignore"):
        return np.exp(-np.exp(-np.asarray(y, dtype=float)))


@dataclass(frozen=True)
class GumbelStandard:
    """Location 0, scale 1."""

    median: float = -math.log(math.log(2.0))
    mean: float = 0.57721566490153286061
    variance: float = math.pi**2 / 6

    @staticmethod
    def cdf(y):
        return gumbel_cdf(y)

    @staticmethod
    def quantile(u: float) -> float:
        if not 0 < u < 1:
            raise ValueError("quantile needs 0 < u < 1")
        return -math.log(-math.log(u))


@dataclass(frozen=True)
class KSResult:
    D: float
    n: int

    @property
    def critical_05(self) -> float:
        return self.critical(0.05)

    def critical(self, level: float) -> float:
        try:
            return KS_CRITICAL[level] / math.sqrt(self.n)
        except KeyError:
            raise ValueError(f"no critical constant for level {level}; have {sorted(KS_CRITICAL)}") from None

    def passes(self, level: float = 0.05) -> bool:
        return self.D < self.critical(level)

    def __iter__(self):
        yield self.D
        yield self.n
        yield self.critical_05


def _evaluate(cdf: Callable, x: np.ndarray) -> np.ndarray:
    try:
        out = np.asarray(cdf(x), dtype=float)
        if out.shape == x.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([float(cdf(v)) for v in x])


def ks_statistic(samples: Sequence[float], cdf: Callable) -> KSResult:
    """sup_x |ECDF(x) - cdf(x)| over the sorted samples.

    The lower deviation at x_(i) uses the left limit cdf(x_(i)-), so a step
    function cdf (for instance the ECDF of the same data) is handled exactly.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise ValueError("ks_statistic needs at least one sample")
    if np.isnan(x).any():
        raise ValueError("samples contain NaN")
    upper = _evaluate(cdf, x)
    lower = _evaluate(cdf, np.nextafter(x, -np.inf))
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - upper)
    d_minus = np.max(lower - (i - 1) / n)
    return KSResult(float(max(d_plus, d_minus, 0.0)), int(n))


def empirical_cdf(samples: Sequence[float]) -> Callable:
    """Right-continuous step function of the samples, vectorized."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size

    def cdf(y):
        return np.searchsorted(x, y, side="right") / n

    return cdf
