"""Large-M and large-N approximations.

Series expansions (harmonic numbers, partial Basel sums, uniform rising
moments) and the closed-form predictions for the two-group scaling family.
Asymptotic series here are divergent in general; every evaluated series
carries the magnitude of its first omitted term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from scipy import integrate

from .exact import basel_partial, harmonic
from .model import ScalingFamily

__all__ = [
    "EULER_GAMMA",
    "GAMMA_DERIVATIVES_AT_ONE",
    "Prediction",
    "SeriesExpansion",
    "ZETA2",
    "ZETA3",
    "basel_tail_asymptotic",
    "bernoulli_numbers",
    "gamma_derivative_at_one",
    "gamma_derivative_quadrature",
    "gen_binomial",
    "harmonic_asymptotic",
    "lanczos_gamma",
    "mean_T1_asymptotic",
    "mean_T2_asymptotic",
    "mean_T_asymptotic",
    "moment_r_leading",
    "p_first_asymptotic",
    "second_rising_T1_asymptotic",
    "second_rising_T2_asymptotic",
    "second_rising_T_asymptotic",
    "uniform_rising_moment_series",
    "var_T1_asymptotic",
    "var_T2_asymptotic",
    "var_T_asymptotic",
]

EULER_GAMMA = 0.57721566490153286061
ZETA2 = 1.6449340668482264365  # pi^2 / 6
ZETA3 = 1.2020569031595942854

GAMMA_DERIVATIVES_AT_ONE = (
    1.0,
    -EULER_GAMMA,
    ZETA2 + EULER_GAMMA**2,
    -(2 * ZETA3 + 3 * ZETA2 * EULER_GAMMA + EULER_GAMMA**3),
)

MAX_SERIES_ORDER = 6


@dataclass(frozen=True)
class SeriesExpansion:
    """A truncated asymptotic series evaluated at one scale value.

    ``terms`` are the evaluated summands in order, each with a label;
    ``first_omitted`` is |first dropped term|, the usual error proxy.
    """

    terms: tuple[tuple[float, str], ...]
    truncation_order: int
    first_omitted: float
    scale: str = ""

    @property
    def value(self) -> float:
        return math.fsum(t for t, _ in self.terms)

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class Prediction:
    """An asymptotic prediction together with the order of its neglected remainder."""

    value: float
    error_order: str
    alternatives: dict[str, float] = field(default_factory=dict)

    def __float__(self) -> float:
        return self.value


# -- special numbers ---------------------------------------------------------------


@lru_cache(maxsize=8)
def _bernoulli(m_max: int) -> tuple[Fraction, ...]:
    b = [Fraction(1)]
    for m in range(1, m_max + 1):
        b.append(-sum(math.comb(m + 1, k) * b[k] for k in range(m)) / Fraction(m + 1))
    return tuple(b)


def bernoulli_numbers(m_max: int) -> list[Fraction]:
    """[B_0, B_1, ..., B_m_max] for z/(e^z - 1) = sum B_m z^m / m!, so B_1 = -1/2."""
    if not 0 <= m_max <= 60:
        raise ValueError("m_max must lie in 0..60")
    return list(_bernoulli(m_max))


_LANCZOS_G = 7
_LANCZOS_COEFFS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def lanczos_gamma(x: float) -> float:
    """Gamma(x) for real x > 0 via the Lanczos approximation (g=7, n=9)."""
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * lanczos_gamma(1 - x))
    x -= 1
    acc = _LANCZOS_COEFFS[0]
    for i, c in enumerate(_LANCZOS_COEFFS[1:], start=1):
        acc += c / (x + i)
    t = x + _LANCZOS_G + 0.5
    return math.sqrt(2 * math.pi) * math.exp((x + 0.5) * math.log(t) - t) * acc


def gen_binomial(r: float, k: int) -> float:
    """r (r-1) ... (r-k+1) / k! for real r."""
    if k < 0:
        raise ValueError("k must be >= 0")
    out = 1.0
    for i in range(k):
        out *= (r - i) / (i + 1)
    return out


@lru_cache(maxsize=16)
def gamma_derivative_quadrature(k: int) -> float:
    """Gamma^(k)(1) = int_0^inf e^(-x) (ln x)^k dx, integrated in u = -ln x.

    In u the integrand exp(-e^(-u) - u) (-u)^k is smooth on the whole line
    with double-exponential decay to the left and exponential to the right.
    """
    if k < 0:
        raise ValueError("k must be >= 0")

    def f(u: float) -> float:
        return math.exp(-math.exp(-u) - u) * (-u) ** k

    pieces = [
        integrate.quad(f, a, b, epsabs=1e-14, epsrel=1e-13, limit=400)[0]
        for a, b in ((-5.0, 0.0), (0.0, 10.0), (10.0, 60.0), (60.0, 200.0))
    ]
    return math.fsum(pieces)


def gamma_derivative_at_one(k: int) -> float:
    """Closed-form constants for k <= 3, quadrature above."""
    if k < len(GAMMA_DERIVATIVES_AT_ONE):
        return GAMMA_DERIVATIVES_AT_ONE[k]
    return gamma_derivative_quadrature(k)


# -- series -----------------------------------------------------------------------


def harmonic_asymptotic(N: int, order: int) -> SeriesExpansion:
    """H_N ~ ln N + gamma + 1/(2N) - sum_{k=1..order} B_2k / (2k N^2k)."""
    if N < 2:
        raise ValueError("N must be >= 2")
    if order < 0:
        raise ValueError("order must be >= 0")
    b = _bernoulli(2 * order + 2)
    terms = [(math.log(N), "ln N"), (EULER_GAMMA, "gamma"), (1 / (2 * N), "1/(2N)")]
    for k in range(1, order + 1):
        terms.append((-float(b[2 * k]) / (2 * k * N ** (2 * k)), f"-B_{2*k}/({2*k} N^{2*k})"))
    k = order + 1
    omitted = abs(float(b[2 * k]) / (2 * k * N ** (2 * k)))
    return SeriesExpansion(tuple(terms), order, omitted, f"N={N}")


def basel_tail_asymptotic(N: int, order: int) -> SeriesExpansion:
    """sum_{j<=N} 1/j^2 ~ pi^2/6 - 1/N + 1/(2N^2) - sum_{k=1..order} B_2k / N^(2k+1)."""
    if N < 2:
        raise ValueError("N must be >= 2")
    if order < 0:
        raise ValueError("order must be >= 0")
    b = _bernoulli(2 * order + 2)
    terms = [(ZETA2, "pi^2/6"), (-1 / N, "-1/N"), (1 / (2 * N * N), "1/(2N^2)")]
    for k in range(1, order + 1):
        terms.append((-float(b[2 * k]) / N ** (2 * k + 1), f"-B_{2*k}/N^{2*k+1}"))
    k = order + 1
    omitted = abs(float(b[2 * k]) / N ** (2 * k + 1))
    return SeriesExpansion(tuple(terms), order, omitted, f"N={N}")


def uniform_rising_moment_series(N: int, r: float, n: int) -> SeriesExpansion:
    """E[S_N^(r)] ~ N^r ln^r N sum_{k=0..n} C(r,k) (-1)^k Gamma^(k)(1) / ln^k N."""
    if N < 2:
        raise ValueError("N must be >= 2")
    if not 0 <= n <= MAX_SERIES_ORDER:
        raise ValueError(f"series order must lie in 0..{MAX_SERIES_ORDER}")
    if not r > 0:
        raise ValueError("r must be > 0")
    L = math.log(N)
    lead = N**r * L**r

    def term(k: int) -> float:
        return lead * gen_binomial(r, k) * (-1) ** k * gamma_derivative_at_one(k) / L**k

    terms = tuple((term(k), f"k={k}") for k in range(n + 1))
    return SeriesExpansion(terms, n, abs(term(n + 1)), f"N={N}, r={r}")


# -- two-group scaling family -----------------------------------------------------


def _require_lambda_above_one(f: ScalingFamily) -> float:
    lam = float(f.lam)
    if not lam > 1:
        raise ValueError(
            f"lambda = p2/p1 must exceed 1 (got {lam}); relabel the groups so that group 2 is the likelier one"
        )
    return lam


def p_first_asymptotic(f: ScalingFamily) -> float:
    """P{T_1 < T_2} ~ nu2 Gamma(lam+1) / (nu1^lam M^(lam-1))."""
    lam = _require_lambda_above_one(f)
    return f.nu2 * lanczos_gamma(lam + 1) / (f.nu1**lam * f.M ** (lam - 1))


def mean_T1_asymptotic(f: ScalingFamily, detail: str = "harmonic") -> float:
    """E[T_1] up to exponentially small terms.

    ``harmonic``: c M H_{nu1 M} with c = nu1 + lam nu2.
    ``expanded``: c M ln M + c (gamma + ln nu1) M + c/(2 nu1), the same
    quantity with H expanded to O(1/M).
    """
    c = f.c1
    if detail == "harmonic":
        return c * f.M * harmonic(f.M1)
    if detail == "expanded":
        return c * f.M * math.log(f.M) + c * (EULER_GAMMA + math.log(f.nu1)) * f.M + c / (2 * f.nu1)
    raise ValueError(f"detail must be 'harmonic' or 'expanded', got {detail!r}")


def mean_T2_asymptotic(f: ScalingFamily, detail: str = "harmonic") -> float:
    """E[T_2] ~ (nu1/lam + nu2) M H_{nu2 M}; mirror image of :func:`mean_T1_asymptotic`."""
    c = f.c2
    if detail == "harmonic":
        return c * f.M * harmonic(f.M2)
    if detail == "expanded":
        return c * f.M * math.log(f.M) + c * (EULER_GAMMA + math.log(f.nu2)) * f.M + c / (2 * f.nu2)
    raise ValueError(f"detail must be 'harmonic' or 'expanded', got {detail!r}")


def mean_T_asymptotic(f: ScalingFamily) -> Prediction:
    """E[T] = c M H_{nu1 M} + O(M^(2-lam) ln M), lam > 1.

    ``alternatives['expanded']`` is the ln M form; its constant c/(2 nu1) is
    only meaningful (and only included) when lam > 2, where the remainder
    is o(1).
    """
    lam = _require_lambda_above_one(f)
    c, M = f.c1, f.M
    value = c * M * harmonic(f.M1)
    expanded = c * M * math.log(M) + c * (EULER_GAMMA + math.log(f.nu1)) * M
    if lam > 2:
        expanded += c / (2 * f.nu1)
        order = "o(1)"
    else:
        order = f"O(M^{2 - lam:g} ln M)"
    return Prediction(value, order, {"expanded": expanded})


def second_rising_T1_asymptotic(f: ScalingFamily) -> float:
    """E[T_1 (T_1 + 1)] ~ c^2 M^2 (H^2 + sum 1/j^2) over j <= nu1 M."""
    h = harmonic(f.M1)
    return (f.c1 * f.M) ** 2 * (h * h + basel_partial(f.M1))


def second_rising_T2_asymptotic(f: ScalingFamily) -> float:
    h = harmonic(f.M2)
    return (f.c2 * f.M) ** 2 * (h * h + basel_partial(f.M2))


def var_T1_asymptotic(f: ScalingFamily, detail: str = "full") -> float:
    """V[T_1]: ``full`` c^2 M^2 sum_{j<=nu1 M} 1/j^2 - c M H_{nu1 M}; ``leading`` pi^2 c^2 M^2 / 6."""
    c, M = f.c1, f.M
    if detail == "full":
        return (c * M) ** 2 * basel_partial(f.M1) - c * M * harmonic(f.M1)
    if detail == "leading":
        return ZETA2 * (c * M) ** 2
    raise ValueError(f"detail must be 'full' or 'leading', got {detail!r}")


def var_T2_asymptotic(f: ScalingFamily, detail: str = "full") -> float:
    c, M = f.c2, f.M
    if detail == "full":
        return (c * M) ** 2 * basel_partial(f.M2) - c * M * harmonic(f.M2)
    if detail == "leading":
        return ZETA2 * (c * M) ** 2
    raise ValueError(f"detail must be 'full' or 'leading', got {detail!r}")


def var_T_asymptotic(f: ScalingFamily) -> float:
    """V[T] ~ pi^2 (nu1 + lam nu2)^2 M^2 / 6, lam > 1."""
    _require_lambda_above_one(f)
    return ZETA2 * (f.c1 * f.M) ** 2


def second_rising_T_asymptotic(f: ScalingFamily) -> Prediction:
    """E[T (T + 1)] = c^2 M^2 (H^2 + sum 1/j^2) + O(M^(3-lam+eps)), lam > 1."""
    lam = _require_lambda_above_one(f)
    return Prediction(second_rising_T1_asymptotic(f), f"O(M^({3 - lam:g}+eps))")


def moment_r_leading(f: ScalingFamily, r: float, which: str = "T") -> float:
    """Leading order c^r M^r ln^r M of E[X^r] and E[X^(r)] for X in {T1, T2, T}."""
    if not r > 0:
        raise ValueError("r must be > 0")
    if which == "T":
        _require_lambda_above_one(f)
        c = f.c1
    elif which == "T1":
        c = f.c1
    elif which == "T2":
        c = f.c2
    else:
        raise ValueError(f"which must be T1, T2 or T, got {which!r}")
    return (c * f.M * math.log(f.M)) ** r
