"""Adaptive quadrature on finite and half-infinite ranges.

Half-infinite integrals are truncated at a point where a caller-supplied
analytic tail bound drops below half the absolute tolerance; the finite part
goes to QUADPACK's adaptive Gauss-Kronrod routines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from scipy import integrate

__all__ = ["QuadratureError", "QuadratureSettings", "integrate_finite", "integrate_half_line"]


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""


@dataclass(frozen=True)
class QuadratureSettings:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 500

    def __post_init__(self) -> None:
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")

    def target(self, value: float) -> float:
        return max(self.abs_tol, self.rel_tol * abs(value))


DEFAULT_SETTINGS = QuadratureSettings()


def _quad(f, a, b, s: QuadratureSettings, **kw) -> tuple[float, float]:
    out = integrate.quad(
        f, a, b, epsabs=s.abs_tol / 4, epsrel=s.rel_tol / 4, limit=s.max_subdivisions, full_output=1, **kw
    )
    # A nonzero QUADPACK flag with a small error estimate is usually roundoff
    # noticed in an already converged piece; callers judge the final error.
    return out[0], out[1]


def integrate_finite(
    f: Callable[[float], float],
    a: float,
    b: float,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
    *,
    left_power: float | None = None,
    points: list[float] | None = None,
) -> tuple[float, float]:
    """Integrate ``f`` over ``[a, b]``; ``left_power`` multiplies by ``(x - a)**left_power``.

    The algebraic weight is integrated analytically (QAWS), so ``f`` is never
    evaluated against an endpoint singularity of the weight.
    """
    if left_power is not None and left_power != 0:
        value, err = _quad(f, a, b, settings, weight="alg", wvar=(left_power, 0.0))
    elif points:
        inner = [p for p in points if a < p < b]
        value, err = _quad(f, a, b, settings, points=inner or None)
    else:
        value, err = _quad(f, a, b, settings)
    if err > settings.target(value):
        raise QuadratureError(f"error estimate {err:.2e} exceeds target on [{a}, {b}]")
    return value, err


def integrate_half_line(
    f: Callable[[float], float],
    tail_bound: Callable[[float], float],
    settings: QuadratureSettings = DEFAULT_SETTINGS,
    *,
    scale: float = 1.0,
    left_power: float = 0.0,
) -> tuple[float, float]:
    """Integrate ``t**left_power * f(t)`` over ``[0, inf)``.

    ``tail_bound(t)`` must bound the integral over ``[t, inf)`` and decrease in
    ``t``.  ``scale`` is the natural time unit of the integrand; the finite part
    is split into geometrically growing pieces of that unit.
    """
    if scale <= 0 or not math.isfinite(scale):
        raise ValueError("scale must be positive and finite")
    cutoff = scale
    for _ in range(200):
        if tail_bound(cutoff) < settings.abs_tol / 2:
            break
        cutoff *= 2
    else:
        raise QuadratureError("could not find a tail cutoff")

    edges = [0.0]
    edge = min(scale, cutoff)
    while edge < cutoff:
        edges.append(edge)
        edge *= 2
    edges.append(cutoff)

    pieces = []
    total_err = settings.abs_tol / 2
    for i, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        if i == 0 and left_power != 0:
            v, e = _quad(f, a, b, settings, weight="alg", wvar=(left_power, 0.0))
        elif left_power != 0:
            v, e = _quad(lambda t: t**left_power * f(t), a, b, settings)
        else:
            v, e = _quad(f, a, b, settings)
        pieces.append(v)
        total_err += e
    value = math.fsum(pieces)
    if total_err > 2 * settings.target(value):
        raise QuadratureError(f"accumulated error {total_err:.2e} exceeds target")
    return value, total_err
