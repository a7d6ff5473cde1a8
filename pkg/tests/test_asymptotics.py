import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from coupon_mixture import asymptotics as asy
from coupon_mixture.exact import (
    basel_partial,
    detection_variance,
    harmonic,
    mixture_moment,
    uniform_mean,
    uniform_second_rising,
)
from coupon_mixture.model import ScalingFamily, mixture_from_scaling
from coupon_mixture.montecarlo import SimConfig, estimate

F = Fraction
GAMMA = 0.5772156649015329
ZETA3 = 1.2020569031595942


def test_constants_match_closed_forms():
    g = asy.GAMMA_DERIVATIVES_AT_ONE
    assert g[0] == 1
    assert g[1] == pytest.approx(-GAMMA, abs=1e-15)
    assert g[2] == pytest.approx(math.pi**2 / 6 + GAMMA**2, abs=1e-14)
    assert g[3] == pytest.approx(-(2 * ZETA3 + math.pi**2 * GAMMA / 2 + GAMMA**3), abs=1e-14)


# k-th derivative of Gamma at 1, from mpmath.diff at 30 digits
GAMMA_DERIVATIVE_REFERENCE = (
    1.0,
    -0.5772156649015328606065,
    1.978111990655945110791,
    -5.444874456485317734099,
    23.56147408402560449607,
    -117.8394082683774242526,
    715.0673625273188590708,
)


@pytest.mark.parametrize("k", range(7))
def test_gamma_derivative_quadrature(k):
    reference = GAMMA_DERIVATIVE_REFERENCE[k]
    assert asy.gamma_derivative_quadrature(k) == pytest.approx(reference, rel=1e-12)
    assert asy.gamma_derivative_at_one(k) == pytest.approx(reference, rel=1e-12)
    if k <= 3:
        assert abs(asy.gamma_derivative_quadrature(k) - asy.GAMMA_DERIVATIVES_AT_ONE[k]) < 1e-9


def test_bernoulli_numbers():
    b = asy.bernoulli_numbers(12)
    assert b[:4] == [1, F(-1, 2), F(1, 6), 0]
    assert b[12] == F(-691, 2730)
    assert all(b[k] == 0 for k in range(3, 13, 2))


@given(st.integers(2, 40))
def test_bernoulli_generating_function(m_max):
    # sum_{k<m} C(m, k) B_k = 0 for m >= 2
    b = asy.bernoulli_numbers(m_max)
    for m in range(2, m_max + 1):
        assert sum(math.comb(m, k) * b[k] for k in range(m)) == 0


def test_lanczos_gamma():
    for x in np.linspace(0.5, 30.5, 61):
        assert asy.lanczos_gamma(x) == pytest.approx(math.gamma(x), rel=1e-12)
    assert asy.lanczos_gamma(3.5) == pytest.approx(15 * math.sqrt(math.pi) / 8, rel=1e-14)


@pytest.mark.parametrize("r, k, expected", [(2, 3, 0), (0.5, 1, 0.5), (0.5, 2, -0.125), (3.7, 0, 1)])
def test_gen_binomial(r, k, expected):
    assert asy.gen_binomial(r, k) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("N, order, tol", [(10, 2, 1e-8), (100, 1, 1e-10)])
def test_harmonic_asymptotic(N, order, tol):
    approx = asy.harmonic_asymptotic(N, order)
    assert abs(approx.value - harmonic(N)) < tol
    assert approx.first_omitted > 0


def test_harmonic_asymptotic_coarse():
    assert abs(asy.harmonic_asymptotic(2, 0).value - 1.5) <= 1 / (2 * 4) * 2


@given(st.integers(10, 2000))
def test_harmonic_asymptotic_error_shrinks(N):
    exact = harmonic(N)
    errors = [abs(asy.harmonic_asymptotic(N, k).value - exact) for k in range(4)]
    assert all(b <= a + 4e-16 * exact for a, b in zip(errors, errors[1:]))


@pytest.mark.parametrize("N, tol", [(10, 1e-6), (100, 1e-10)])
def test_basel_tail(N, tol):
    assert abs(asy.basel_tail_asymptotic(N, 1).value - basel_partial(N)) < tol


def test_basel_tail_limit():
    assert asy.basel_tail_asymptotic(10**7, 0).value == pytest.approx(math.pi**2 / 6, abs=1e-6)


@given(st.integers(2, 10**6))
def test_uniform_series_first_order(N):
    value = asy.uniform_rising_moment_series(N, 1, 1).value
    assert value == pytest.approx(N * (math.log(N) + GAMMA), rel=1e-13)


def test_uniform_series_against_exact():
    assert abs(asy.uniform_rising_moment_series(500, 1, 1).value / uniform_mean(500) - 1) < 0.015
    assert abs(asy.uniform_rising_moment_series(200, 2, 2).value / uniform_second_rising(200) - 1) < 0.05
    with pytest.raises(ValueError):
        asy.uniform_rising_moment_series(100, 1, 7)


def test_p_first_examples():
    assert asy.p_first_asymptotic(ScalingFamily(1, 1, 2, 10)) == pytest.approx(0.2, rel=1e-13)
    assert asy.p_first_asymptotic(ScalingFamily(1, 1, 2, 100)) == pytest.approx(0.02, rel=1e-13)
    expected = 3 * (3 * math.sqrt(math.pi) / 4) / (2**1.5 * 50**0.5)
    assert asy.p_first_asymptotic(ScalingFamily(2, 3, 1.5, 50)) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(ValueError):
        asy.p_first_asymptotic(ScalingFamily(1, 1, 1, 10))


@given(st.floats(1.01, 8), st.integers(1, 4), st.integers(1, 4))
def test_p_first_power_law(lam, nu1, nu2):
    Ms = [10, 100, 1000, 10_000]
    logs = [math.log(asy.p_first_asymptotic(ScalingFamily(nu1, nu2, lam, M))) for M in Ms]
    slope = np.polyfit(np.log(Ms), logs, 1)[0]
    assert abs(slope + (lam - 1)) < 1e-6


def test_p_first_convergence_from_exact_route():
    from coupon_mixture.exact import p_t1_before_t2_integral

    gaps = []
    for M in (5, 10, 20, 40, 80):
        f = ScalingFamily(1, 1, 2, M)
        gaps.append(abs(p_t1_before_t2_integral(mixture_from_scaling(f)) / asy.p_first_asymptotic(f) - 1))
    assert gaps[-1] < 0.15
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


@pytest.mark.parametrize("M", [1, 7, 50])
def test_mean_T1_harmonic(M):
    assert asy.mean_T1_asymptotic(ScalingFamily(1, 1, 2, M)) == pytest.approx(3 * M * harmonic(M), rel=1e-15)
    assert asy.mean_T2_asymptotic(ScalingFamily(1, 1, 2, M)) == pytest.approx(1.5 * M * harmonic(M), rel=1e-15)


def test_mean_T1_expanded_close_to_harmonic():
    f = ScalingFamily(1, 1, 2, 20)
    assert abs(asy.mean_T1_asymptotic(f, "expanded") - asy.mean_T1_asymptotic(f, "harmonic")) < 0.05


def test_mean_T_prediction():
    p = asy.mean_T_asymptotic(ScalingFamily(1, 1, 3, 40))
    assert p.value == pytest.approx(4 * 40 * harmonic(40), rel=1e-15)
    assert p.error_order == "o(1)"
    # the ln M form carries the extra constant 2 = c / (2 nu1)
    assert p.alternatives["expanded"] == pytest.approx(p.value, abs=0.01)
    q = asy.mean_T_asymptotic(ScalingFamily(1, 1, 1.5, 40))
    assert q.value == pytest.approx(2.5 * 40 * harmonic(40), rel=1e-15)
    assert q.error_order == "O(M^0.5 ln M)"


def test_mean_T_against_exact_and_simulation():
    f = ScalingFamily(1, 2, 2.5, 10)
    m = mixture_from_scaling(f)
    s = estimate(m, SimConfig(seed=11, trials=20_000))
    pred = asy.mean_T_asymptotic(f).value
    assert abs(s.stats["T"].mean / pred - 1) < 0.10
    assert abs(mixture_moment(m, 1) / pred - 1) < 0.10


def test_var_T1():
    f = ScalingFamily(1, 1, 1, 30)
    assert asy.var_T1_asymptotic(f, "leading") == pytest.approx(2 * math.pi**2 * 900 / 3, rel=1e-14)
    f = ScalingFamily(1, 1, 2, 200)
    assert abs(asy.var_T1_asymptotic(f, "full") / asy.var_T1_asymptotic(f, "leading") - 1) < 0.05


def test_var_T1_matches_simulation():
    f = ScalingFamily(1, 1, 2, 100)
    s = estimate(mixture_from_scaling(f), SimConfig(seed=5, trials=100_000))
    st1 = s.stats["T1"]
    assert abs(st1.var - asy.var_T1_asymptotic(f)) < 3 * st1.se_var
    assert asy.var_T1_asymptotic(f) == pytest.approx(detection_variance(mixture_from_scaling(f), "T1"), rel=1e-8)


def test_var_T():
    assert asy.var_T_asymptotic(ScalingFamily(1, 1, 2, 100)) == pytest.approx(math.pi**2 * 9e4 / 6, rel=1e-14)
    assert asy.var_T_asymptotic(ScalingFamily(2, 1, 3, 10)) == pytest.approx(math.pi**2 * 25 * 100 / 6, rel=1e-14)
    with pytest.raises(ValueError):
        asy.var_T_asymptotic(ScalingFamily(1, 1, F(1, 2), 10))


def test_second_rising_T():
    M = 30
    f = ScalingFamily(1, 1, 2, M)
    p = asy.second_rising_T_asymptotic(f)
    assert p.value == pytest.approx(9 * M * M * (harmonic(M) ** 2 + basel_partial(M)), rel=1e-14)


@given(st.integers(1, 5), st.integers(1, 5), st.floats(1.1, 6), st.integers(2, 500))
def test_variance_assembles_from_moments(nu1, nu2, lam, M):
    f = ScalingFamily(nu1, nu2, lam, M)
    mean = asy.mean_T1_asymptotic(f)
    second = asy.second_rising_T1_asymptotic(f)
    assert asy.var_T1_asymptotic(f) == pytest.approx(second - mean - mean * mean, rel=1e-9)


def test_second_rising_T_matches_simulation():
    f = ScalingFamily(1, 1, 3, 50)
    s = estimate(mixture_from_scaling(f), SimConfig(seed=2, trials=20_000, rising_orders=(2.0,)))
    assert abs(s.rising["T"][2.0].mean / asy.second_rising_T_asymptotic(f).value - 1) < 0.10


def test_moment_r_leading():
    M = 40
    f = ScalingFamily(1, 1, 2, M)
    assert asy.moment_r_leading(f, 1, "T") == pytest.approx(3 * M * math.log(M), rel=1e-14)
    assert asy.moment_r_leading(f, 2, "T2") == pytest.approx(1.5**2 * M**2 * math.log(M) ** 2, rel=1e-14)


def test_moment_r_leading_trend():
    ratios = []
    for i, M in enumerate((50, 100, 200)):
        f = ScalingFamily(1, 1, 2, M)
        s = estimate(mixture_from_scaling(f), SimConfig(seed=30 + i, trials=10_000, rising_orders=(1.5,)))
        ratios.append(s.rising["T"][1.5].mean / asy.moment_r_leading(f, 1.5, "T"))
    assert ratios[0] > ratios[1] > ratios[2] > 1
