"""Exact first-detection probabilities and detection-time moments.

Every quantity here has at least two independent evaluation routes:

* first-detection probability: the g-fold alternating binomial sum, the
  absorbing-lattice recursion, and (for two groups) four integral forms;
* rising moments E[S^(r)]: the Poissonized integral and the subset
  inclusion-exclusion sum, plus closed forms for the uniform pool.

Groups are numbered from 1 in this module's public API.
"""

from __future__ import annotations

import enum
import itertools
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence, Union

import numba
import numpy as np
from scipy import special

from .model import FLOAT_TOLERANCE, GroupMixture, InvalidMixture, ThetaExample, validate
from .quadrature import (
    DEFAULT_SETTINGS,
    QuadratureSettings,
    integrate_finite,
    integrate_half_line,
)

__all__ = [
    "DEFAULT_MEMORY_BUDGET",
    "EvalMode",
    "INTEGRAL_FORMS",
    "MemoryBudgetExceeded",
    "NumericalRefusal",
    "SumResult",
    "basel_partial",
    "detection_variance",
    "first_detection_prob",
    "first_detection_prob_dp",
    "first_detection_prob_sum",
    "harmonic",
    "harmonic_exact",
    "mixture_moment",
    "mixture_moment_subset_sum",
    "p_t1_before_t2_form",
    "p_t1_before_t2_integral",
    "rising_moment",
    "rising_moment_subset_sum",
    "theta_mean_exact",
    "uniform_mean",
    "uniform_second_rising",
]

Real = Union[Fraction, float]

RATIONAL_TERM_LIMIT = 10**7
FLOAT_TERM_LIMIT = 10**8
CANCELLATION_LIMIT = 1e-6
DEFAULT_MEMORY_BUDGET = 2 * 1024**3
SUBSET_SUM_MAX_N = 25
HARMONIC_EXACT_MAX = 10**4

# Per-term relative error of a log-space term (lgamma, log, exp), in units of
# the double epsilon.  Used to turn sum|t|/|sum t| into a relative error bound.
_TERM_ULPS = 8.0


class EvalMode(str, enum.Enum):
    RATIONAL = "rational"
    FLOAT = "float"
    AUTO = "auto"


class NumericalRefusal(ArithmeticError):
    """No available route can evaluate the quantity reliably."""


class MemoryBudgetExceeded(MemoryError):
    pass


@dataclass(frozen=True)
class SumResult:
    """Value of the alternating sum and how it was obtained.

    ``cancellation`` is sum|term| / |result| for the float route and ``None``
    for exact routes.
    """

    value: Real
    route: str
    cancellation: float | None = None

    @property
    def rel_error_estimate(self) -> float:
        if self.cancellation is None:
            return 0.0
        return _TERM_ULPS * np.finfo(float).eps * self.cancellation

    def __float__(self) -> float:
        return float(self.value)


def _check_group(m: GroupMixture, l: int) -> int:
    if not 1 <= l <= m.g:
        raise IndexError(f"group index {l} outside 1..{m.g}")
    return l - 1


def _term_count(m: GroupMixture) -> int:
    return math.prod(m.counts)


# -- alternating sum -------------------------------------------------------------


def _alternating_sum_rational(m: GroupMixture, li: int) -> Fraction:
    # With p_j = a_j / D every term's ratio k_l p_l / sum k_j p_j is
    # k_l a_l / s for the integer s = sum k_j a_j, so terms sharing s are
    # combined as integer polynomial coefficients before any division.
    a, _ = m.integer_weights()
    poly: dict[int, int] = {0: 1}
    for j, (count, aj) in enumerate(zip(m.counts, a)):
        factors = []
        for k in range(1, count + 1):
            coeff = (-1) ** k * math.comb(count, k)
            if j == li:
                coeff *= k * aj
            factors.append((k * aj, coeff))
        nxt: dict[int, int] = defaultdict(int)
        for e, c in poly.items():
            for de, dc in factors:
                nxt[e + de] += c * dc
        poly = {e: c for e, c in nxt.items() if c}
    total = sum((Fraction(c, e) for e, c in sorted(poly.items())), Fraction(0))
    return total if m.g % 2 == 0 else -total


def _log_binomials(n: int) -> np.ndarray:
    k = np.arange(1, n + 1)
    return special.gammaln(n + 1) - special.gammaln(k + 1) - special.gammaln(n - k + 1)


def _alternating_sum_float(m: GroupMixture, li: int) -> tuple[float, float]:
    """Returns (value, sum of |terms|); terms in log space, exactly rounded partial sums."""
    p = m.float_probs
    g = m.g
    ks = [np.arange(1, c + 1, dtype=float) for c in m.counts]
    logc = [_log_binomials(c) for c in m.counts]

    def grid(values: list[np.ndarray]) -> np.ndarray:
        out = np.zeros([len(v) for v in values])
        for j, v in enumerate(values):
            shape = [1] * len(values)
            shape[j] = len(v)
            out = out + v.reshape(shape)
        return out

    partial_values: list[float] = []
    partial_abs: list[float] = []
    # Chunk over the first group's index to bound memory.
    for k1 in range(1, m.counts[0] + 1):
        sub_k = [np.array([float(k1)])] + ks[1:]
        sub_c = [logc[0][k1 - 1 : k1]] + logc[1:]
        s = grid([k * pj for k, pj in zip(sub_k, p)])
        logmag = grid(sub_c) + grid(_log_share(sub_k, li, p)) - np.log(s)
        parity = grid(sub_k) + g
        terms = np.exp(logmag) * np.where(parity % 2 == 0, 1.0, -1.0)
        partial_values.append(math.fsum(terms.ravel()))
        partial_abs.append(math.fsum(np.abs(terms).ravel()))
    return math.fsum(partial_values), math.fsum(partial_abs)


def _log_share(ks: list[np.ndarray], li: int, p: Sequence[float]) -> list[np.ndarray]:
    """log(k_l p_l) along axis l, zero along the others."""
    return [np.log(k * p[j]) if j == li else np.zeros_like(k) for j, k in enumerate(ks)]


def first_detection_prob_sum(
    m: GroupMixture, l: int, mode: EvalMode | str = EvalMode.AUTO, *, memory_budget: int = DEFAULT_MEMORY_BUDGET
) -> SumResult:
    """P{group l is the first group completed}, by the alternating binomial sum.

    ``rational`` is exact and needs rational probabilities.  ``float`` sums
    log-space terms with exactly rounded partial sums and reports the
    cancellation ratio.  ``auto`` picks rational when possible and falls back
    to the integral (two groups) or lattice route when the float sum loses
    more than about six digits; :class:`NumericalRefusal` if none applies.
    """
    validate(m)
    li = _check_group(m, l)
    mode = EvalMode(mode)
    terms = _term_count(m)

    if mode is EvalMode.RATIONAL:
        if not m.is_rational:
            raise TypeError("rational mode needs rational probabilities")
        return SumResult(_alternating_sum_rational(m, li), "rational")
    if mode is EvalMode.FLOAT:
        if terms > FLOAT_TERM_LIMIT:
            raise NumericalRefusal(f"{terms} terms exceed the float-sum limit")
        value, abs_sum = _alternating_sum_float(m, li)
        cancel = abs_sum / abs(value) if value else math.inf
        return SumResult(value, "float", cancel)

    if m.is_rational and terms <= RATIONAL_TERM_LIMIT:
        return SumResult(_alternating_sum_rational(m, li), "rational")
    if terms <= FLOAT_TERM_LIMIT:
        res = first_detection_prob_sum(m, l, EvalMode.FLOAT)
        if res.rel_error_estimate <= CANCELLATION_LIMIT:
            return res
    if m.g == 2:
        value = p_t1_before_t2_integral(m, "ratio") if li == 0 else 1 - p_t1_before_t2_integral(m, "ratio")
        return SumResult(value, "integral")
    try:
        return SumResult(first_detection_prob_dp(m, l, exact=False, memory_budget=memory_budget), "dp")
    except MemoryBudgetExceeded as exc:
        raise NumericalRefusal(
            f"alternating sum too ill-conditioned and lattice too large for group {l} of {m}"
        ) from exc


def first_detection_prob(m: GroupMixture, l: int) -> Real:
    """Convenience wrapper: the best available value of P{T_l = T_min}."""
    return first_detection_prob_sum(m, l, EvalMode.AUTO).value


# -- lattice recursion -----------------------------------------------------------


@numba.njit(cache=True, nogil=True)
def _lattice_float(counts, probs, li):  # pragma: no cover - compiled
    g = counts.shape[0]
    strides = np.ones(g, dtype=np.int64)
    for j in range(g - 2, -1, -1):
        strides[j] = strides[j + 1] * (counts[j + 1] + 1)
    size = strides[0] * (counts[0] + 1)
    v = np.empty(size)
    n = np.zeros(g, dtype=np.int64)
    for idx in range(size):
        rem = idx
        zeros = 0
        zero_at = -1
        for j in range(g):
            n[j] = rem // strides[j]
            rem -= n[j] * strides[j]
            if n[j] == 0:
                zeros += 1
                zero_at = j
        if zeros == 1:
            v[idx] = 1.0 if zero_at == li else 0.0
        elif zeros > 1:
            v[idx] = np.nan  # unreachable: groups complete one draw at a time
        else:
            num = 0.0
            den = 0.0
            for j in range(g):
                w = probs[j] * n[j]
                num += w * v[idx - strides[j]]
                den += w
            v[idx] = num / den
    return v[size - 1]


def _lattice_rational(m: GroupMixture, li: int) -> Fraction:
    a, _ = m.integer_weights()
    g = m.g
    strides = [math.prod(c + 1 for c in m.counts[j + 1 :]) for j in range(g)]
    v: list[Fraction | None] = []
    for idx, n in enumerate(itertools.product(*(range(c + 1) for c in m.counts))):
        zeros = [j for j in range(g) if n[j] == 0]
        if len(zeros) == 1:
            v.append(Fraction(1) if zeros[0] == li else Fraction(0))
        elif zeros:
            v.append(None)
        else:
            num = sum((a[j] * n[j] * v[idx - strides[j]] for j in range(g)), Fraction(0))
            v.append(num / sum(a[j] * n[j] for j in range(g)))
    return v[-1]


def first_detection_prob_dp(
    m: GroupMixture, l: int, *, exact: bool | None = None, memory_budget: int = DEFAULT_MEMORY_BUDGET
) -> Real:
    """P{T_l = T_min} from the absorbing Markov chain on remaining-coupon counts.

    n_j counts the group-j coupons still missing.  From n, a draw removes one
    coupon of group j with weight p_j n_j (draws of seen coupons are
    self-loops and drop out).  The value is 1 once group l is complete and 0
    once another group is.  Lattice points are visited in row-major order, in
    which every n - e_j precedes n.
    """
    validate(m)
    li = _check_group(m, l)
    exact = m.is_rational if exact is None else exact
    size = math.prod(c + 1 for c in m.counts)
    per_point = 200 if exact else 8
    if size * per_point > memory_budget:
        raise MemoryBudgetExceeded(f"lattice of {size} points exceeds {memory_budget} bytes")
    if exact:
        if not m.is_rational:
            raise TypeError("exact lattice recursion needs rational probabilities")
        return _lattice_rational(m, li)
    return float(_lattice_float(np.array(m.counts, dtype=np.int64), np.array(m.float_probs), li))


# -- two-group integral forms ----------------------------------------------------

INTEGRAL_FORMS = ("stieltjes", "ratio", "inverse-ratio", "exponential")


def _geometric_points(start: float, stop: float = 1.0) -> list[float]:
    pts = []
    x = start
    while x < stop and len(pts) < 80:
        if x > 0:
            pts.append(x)
        x *= 2
    return pts


def _form_ratio(M1: int, M2: int, lam: float, s: QuadratureSettings) -> float:
    # lam * M2 * int_0^1 x^(lam-1) (1-x)^M1 (1-x^lam)^(M2-1) dx,  lam >= 1
    def f(x: float) -> float:
        if x <= 0.0:
            return 1.0 if lam == 1 else 0.0
        if x >= 1.0:
            return 0.0
        lx = math.log(x)
        tail = (M2 - 1) * math.log(-math.expm1(lam * lx)) if M2 > 1 else 0.0
        return math.exp((lam - 1) * lx + M1 * math.log1p(-x) + tail)

    value, _ = integrate_finite(f, 0.0, 1.0, s, points=_geometric_points(1 / (16 * M1)))
    return lam * M2 * value


def _form_inverse_ratio(M1: int, M2: int, lam: float, s: QuadratureSettings) -> float:
    # M2 * int_0^1 (1 - x^(1/lam))^M1 (1-x)^(M2-1) dx,  lam >= 1
    def f(x: float) -> float:
        if x <= 0.0:
            return 1.0
        if x >= 1.0:
            return 0.0
        head = M1 * math.log(-math.expm1(math.log(x) / lam))
        return math.exp(head + (M2 - 1) * math.log1p(-x))

    # near 0 the integrand is 1 - M1 x^(1/lam) + ..., a cusp for large lam;
    # breakpoints down to the tolerance isolate it (the integrand is <= 1)
    value, _ = integrate_finite(f, 0.0, 1.0, s, points=_geometric_points(s.abs_tol / 16))
    return M2 * value


def _form_stieltjes(M1: int, M2: int, lam: float, s: QuadratureSettings) -> float:
    # -int_0^1 (1-x^p1)^M1 d[(1-x^p2)^M2] with w = (1-x^p2)^M2 and u = 1 - w:
    # int_0^1 [1 - (1 - (1-u)^(1/M2))^(1/lam)]^M1 du.  No underflow in x.
    def f(u: float) -> float:
        if u <= 0.0:
            return 1.0
        if u >= 1.0:
            return 0.0
        y = -math.expm1(math.log1p(-u) / M2)  # 1 - (1-u)^(1/M2) = x^p2
        z = -math.expm1(math.log(y) / lam)  # 1 - x^p1
        return math.exp(M1 * math.log(z)) if z > 0 else 0.0

    value, _ = integrate_finite(f, 0.0, 1.0, s, points=_geometric_points(s.abs_tol / 16))
    return value


def _form_exponential(M1: int, M2: int, p1: float, p2: float, s: QuadratureSettings) -> float:
    # p2 M2 int_0^inf e^(-p2 t) (1-e^(-p1 t))^M1 (1-e^(-p2 t))^(M2-1) dt
    def f(t: float) -> float:
        if t <= 0.0:
            return 0.0
        expo = -p2 * t + M1 * math.log(-math.expm1(-p1 * t))
        if M2 > 1:
            expo += (M2 - 1) * math.log(-math.expm1(-p2 * t))
        return p2 * M2 * math.exp(expo)

    value, _ = integrate_half_line(f, lambda t: M2 * math.exp(-p2 * t), s, scale=1 / max(p1, p2))
    return value


def p_t1_before_t2_form(
    M1: int, M2: int, p1: float, p2: float, form: str = "ratio", settings: QuadratureSettings = DEFAULT_SETTINGS
) -> float:
    """P{T_1 < T_2} for group sizes M1, M2 and per-coupon probabilities p1, p2.

    Only the ratio p2/p1 matters, so p1 and p2 need not satisfy
    M1 p1 + M2 p2 = 1.  Forms:

    ``stieltjes``      -int (1-x^p1)^M1 d[(1-x^p2)^M2] over [0,1], integrated in w=(1-x^p2)^M2
    ``ratio``          lam M2 int x^(lam-1) (1-x)^M1 (1-x^lam)^(M2-1) dx
    ``inverse-ratio``  M2 int (1-x^(1/lam))^M1 (1-x)^(M2-1) dx
    ``exponential``    p2 M2 int_0^inf e^(-p2 t)(1-e^(-p1 t))^M1 (1-e^(-p2 t))^(M2-1) dt

    The two ``ratio`` forms need lam >= 1; for lam < 1 the labels are swapped
    and the complement returned.
    """
    if form not in INTEGRAL_FORMS:
        raise ValueError(f"unknown integral form {form!r}; choose from {INTEGRAL_FORMS}")
    if M1 < 1 or M2 < 1 or not (p1 > 0 and p2 > 0):
        raise InvalidMixture("group sizes and probabilities must be positive")
    p1, p2 = float(p1), float(p2)
    lam = p2 / p1
    if form in ("ratio", "inverse-ratio") and lam < 1:
        return 1.0 - p_t1_before_t2_form(M2, M1, p2, p1, form, settings)
    if form == "ratio":
        return _form_ratio(M1, M2, lam, settings)
    if form == "inverse-ratio":
        return _form_inverse_ratio(M1, M2, lam, settings)
    if form == "stieltjes":
        return _form_stieltjes(M1, M2, lam, settings)
    return _form_exponential(M1, M2, p1, p2, settings)


def p_t1_before_t2_integral(
    m: GroupMixture, form: str = "ratio", settings: QuadratureSettings = DEFAULT_SETTINGS
) -> float:
    """P{T_1 < T_2} for a two-group mixture by quadrature of one integral form."""
    validate(m)
    if m.g != 2:
        raise InvalidMixture(f"integral forms need exactly two groups, got {m.g}")
    (M1, M2), (p1, p2) = m.counts, m.float_probs
    return p_t1_before_t2_form(M1, M2, p1, p2, form, settings)


# -- rising moments ----------------------------------------------------------------


def _check_order(r: float) -> float:
    r = float(r)
    if not r > 0 or not math.isfinite(r):
        raise ValueError(f"moment order must be a positive real, got {r}")
    return r


def _check_probability_vector(q: Sequence[Real]) -> None:
    if len(q) < 1:
        raise InvalidMixture("need at least one coupon")
    if any(not x > 0 for x in q):
        raise InvalidMixture("coupon probabilities must be positive")
    if all(isinstance(x, (Fraction, int)) for x in q):
        total = sum(Fraction(x) for x in q)
        if total != 1:
            raise InvalidMixture(f"coupon probabilities sum to {total}", total - 1)
    else:
        total = math.fsum(float(x) for x in q)
        if abs(total - 1) > FLOAT_TOLERANCE:
            raise InvalidMixture(f"coupon probabilities sum to {total!r}", total - 1)


def _max_exponential_moment(probs: Sequence[float], counts: Sequence[int], r: float, s: QuadratureSettings) -> float:
    """r int_0^inf t^(r-1) [1 - prod_j (1 - e^(-p_j t))^(c_j)] dt."""
    p = np.asarray(probs, dtype=float)
    c = np.asarray(counts, dtype=float)
    gamma_r1 = math.gamma(r + 1)

    pairs = list(zip(p.tolist(), c.tolist()))

    def f(t: float) -> float:
        if t <= 0.0:
            return r
        # scalar loop: groups are few and numpy call overhead dominates here
        log_prod = 0.0
        for pj, cj in pairs:
            log_prod += cj * math.log(-math.expm1(-pj * t))
        return -r * math.expm1(log_prod)

    def tail(t: float) -> float:
        # 1 - prod(1 - x_j) <= sum x_j, then the incomplete gamma integral
        return gamma_r1 * float(np.sum(c * special.gammaincc(r, p * t) / p**r))

    value, _ = integrate_half_line(f, tail, s, scale=1 / float(p.max()), left_power=r - 1)
    return value


def _grouped(q: Sequence[Real]) -> tuple[list[Real], list[int]]:
    tally = Counter(q)
    keys = sorted(tally)
    return keys, [tally[k] for k in keys]


def rising_moment(q: Sequence[Real], r: float, settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """E[S^(r)] = E[Gamma(S+r)/Gamma(S)] for the time S to collect every coupon.

    Evaluated as r int_0^inf t^(r-1) [1 - prod(1 - e^(-q_j t))] dt, the
    Poissonized form; identical probabilities are grouped into powers.
    """
    r = _check_order(r)
    _check_probability_vector(q)
    probs, counts = _grouped(q)
    return _max_exponential_moment([float(x) for x in probs], counts, r, settings)


def _subset_sum_grouped(probs: Sequence[Real], counts: Sequence[int], r: float) -> Real:
    """Gamma(r+1) sum over nonempty sub-multisets J of (-1)^(|J|-1) / (sum_J q)^r."""
    exact = float(r).is_integer() and all(isinstance(x, (Fraction, int)) for x in probs)
    if exact:
        fr = [Fraction(x) for x in probs]
        den = math.lcm(*(x.denominator for x in fr))
        a = [int(x * den) for x in fr]
        poly: dict[int, int] = {0: 1}
        for aj, cj in zip(a, counts):
            nxt: dict[int, int] = defaultdict(int)
            for e, coeff in poly.items():
                for k in range(cj + 1):
                    nxt[e + k * aj] += coeff * (-1) ** k * math.comb(cj, k)
            poly = {e: v for e, v in nxt.items() if v}
        ri = int(r)
        total = sum((Fraction(-coeff) * Fraction(den, e) ** ri for e, coeff in poly.items() if e), Fraction(0))
        return math.factorial(ri) * total

    p = [float(x) for x in probs]
    axes = [np.arange(cj + 1, dtype=float) for cj in counts]
    logc = [special.gammaln(cj + 1) - special.gammaln(k + 1) - special.gammaln(cj - k + 1) for cj, k in zip(counts, axes)]
    parts = []
    # Chunk over the first axis to bound memory.
    for k0 in range(counts[0] + 1):
        sub_axes = [np.array([float(k0)])] + axes[1:]
        sub_logc = [logc[0][k0 : k0 + 1]] + logc[1:]
        shape = [len(x) for x in sub_axes]
        ssum = np.zeros(shape)
        lc = np.zeros(shape)
        par = np.zeros(shape)
        for j, (k, l_) in enumerate(zip(sub_axes, sub_logc)):
            view = [1] * len(shape)
            view[j] = len(k)
            ssum = ssum + (k * p[j]).reshape(view)
            lc = lc + l_.reshape(view)
            par = par + k.reshape(view)
        mask = ssum > 0
        terms = np.exp(lc[mask] - r * np.log(ssum[mask])) * np.where(par[mask] % 2 == 1, 1.0, -1.0)
        parts.append(math.fsum(terms))
    return math.gamma(r + 1) * math.fsum(parts)


def rising_moment_subset_sum(q: Sequence[Real], r: float) -> Real:
    """E[S^(r)] by inclusion-exclusion over the 2^N - 1 nonempty coupon subsets.

    Exact (a Fraction) when r is an integer and all q are rational.
    """
    r = _check_order(r)
    _check_probability_vector(q)
    if len(q) > SUBSET_SUM_MAX_N:
        raise ValueError(f"subset sum limited to N <= {SUBSET_SUM_MAX_N}, got {len(q)}")
    probs, counts = _grouped(q)
    return _subset_sum_grouped(probs, counts, r)


# -- uniform pool closed forms ---------------------------------------------------


@lru_cache(maxsize=256)
def harmonic(N: int) -> float:
    """H_N = sum_{j<=N} 1/j, correctly rounded sum."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return math.fsum(1.0 / j for j in range(1, N + 1))


@lru_cache(maxsize=64)
def harmonic_exact(N: int) -> Fraction:
    if not 1 <= N <= HARMONIC_EXACT_MAX:
        raise ValueError(f"exact harmonic numbers available for 1 <= N <= {HARMONIC_EXACT_MAX}")
    num, den = 0, 1
    for j in range(1, N + 1):
        num, den = num * j + den, den * j
    return Fraction(num, den)


@lru_cache(maxsize=256)
def basel_partial(N: int) -> float:
    """sum_{j<=N} 1/j^2."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return math.fsum(1.0 / (j * j) for j in range(1, N + 1))


def uniform_mean(N: int) -> float:
    """E[S_N] = N H_N for N equally likely coupons."""
    return N * harmonic(N)


def uniform_second_rising(N: int) -> float:
    """E[S_N (S_N + 1)] = N^2 (H_N^2 + sum 1/j^2) for N equally likely coupons."""
    h = harmonic(N)
    return N * N * (h * h + basel_partial(N))


def theta_mean_exact(x: ThetaExample, settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """E[S(theta)]: closed-form uniform part N H_N/(1-theta) plus a quadrature remainder."""
    N, theta = x.N, float(x.theta)
    rest = 1.0 - theta
    main = N * harmonic(N) / rest

    def f(t: float) -> float:
        if t <= 0.0:
            return 0.0
        return math.exp(-theta * t + N * math.log(-math.expm1(-rest * t / N)))

    remainder, _ = integrate_half_line(
        f, lambda t: math.exp(-theta * t) / theta, settings, scale=min(1 / theta, N / rest)
    )
    return main + remainder


# -- mixtures ------------------------------------------------------------------------


def _groups_for(m: GroupMixture, which: str) -> list[int]:
    if which == "T":
        return list(range(m.g))
    if which.startswith("T") and which[1:].isdigit():
        j = int(which[1:])
        if 1 <= j <= m.g:
            return [j - 1]
    raise ValueError(f"which must be 'T' or 'T1'..'T{m.g}', got {which!r}")


def mixture_moment(
    m: GroupMixture, r: float, settings: QuadratureSettings = DEFAULT_SETTINGS, which: str = "T"
) -> float:
    """E[X^(r)] where X is T (whole pool) or T_j (group j only).

    Poissonization covers any sub-collection of coupons, so for T_j the
    product runs over group j only.
    """
    validate(m)
    r = _check_order(r)
    idx = _groups_for(m, which)
    return _max_exponential_moment([float(m.probs[j]) for j in idx], [m.counts[j] for j in idx], r, settings)


def mixture_moment_subset_sum(m: GroupMixture, r: float, which: str = "T") -> Real:
    """E[X^(r)] by inclusion-exclusion; refuses pools with more than 25 coupons."""
    validate(m)
    r = _check_order(r)
    idx = _groups_for(m, which)
    n = sum(m.counts[j] for j in idx)
    if n > SUBSET_SUM_MAX_N:
        raise ValueError(f"subset sum limited to N <= {SUBSET_SUM_MAX_N} coupons, got {n}")
    return _subset_sum_grouped([m.probs[j] for j in idx], [m.counts[j] for j in idx], r)


def detection_variance(m: GroupMixture, which: str = "T", settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """V[X] = E[X(X+1)] - E[X] - E[X]^2."""
    first = mixture_moment(m, 1.0, settings, which)
    second = mixture_moment(m, 2.0, settings, which)
    return second - first - first * first
