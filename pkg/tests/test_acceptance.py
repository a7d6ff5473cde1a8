"""Acceptance gate: one check per criterion, each with its tolerance and time limit.

Run with ``pytest tests/test_acceptance.py -v`` or directly as a script;
either way one PASS/FAIL line is printed per criterion.
"""

from __future__ import annotations

import math
import sys
import time
import warnings
from fractions import Fraction

import numpy as np
import pytest

from coupon_mixture import asymptotics as asy
from coupon_mixture import exact
from coupon_mixture.model import GroupMixture, ScalingFamily, ThetaExample, mixture_from_scaling, validate
from coupon_mixture.montecarlo import SimConfig, estimate, normalized_samples
from coupon_mixture.stats import gumbel_cdf, ks_statistic

EULER_GAMMA = 0.57721566490153286061
ZETA3 = 1.2020569031595942854


def random_mixture(rng, g_max=3, m_max=6, g=None):
    g = g or int(rng.integers(1, g_max + 1))
    counts = [int(c) for c in rng.integers(1, m_max + 1, size=g)]
    shares = [int(w) for w in rng.integers(1, 21, size=g)]
    total = sum(shares)
    m = GroupMixture(tuple(counts), tuple(Fraction(w, total * c) for w, c in zip(shares, counts)))
    validate(m)
    return m


def two_group_mixture(rng, m_max=8):
    # group shares kept in [1/5, 4/5] so the rarest coupon is not vanishingly rare
    counts = [int(c) for c in rng.integers(1, m_max + 1, size=2)]
    a = Fraction(int(rng.integers(20, 81)), 100)
    return GroupMixture(tuple(counts), (a / counts[0], (1 - a) / counts[1]))


# -- criteria ---------------------------------------------------------------------------


def partition_of_unity():
    rng = np.random.default_rng(1)
    bad = 0
    for _ in range(200):
        m = random_mixture(rng)
        total = sum(exact.first_detection_prob_sum(m, l, "rational").value for l in range(1, m.g + 1))
        bad += total != 1
    return bad == 0, f"{200 - bad}/200 mixtures sum to exactly 1", 30


def four_route_agreement():
    rng = np.random.default_rng(2)
    worst_int, worst_z, sum_dp_bad = 0.0, 0.0, 0
    for i in range(50):
        m = two_group_mixture(rng)
        s = exact.first_detection_prob_sum(m, 1, "rational").value
        dp = exact.first_detection_prob_dp(m, 1)
        sum_dp_bad += s != dp
        for form in exact.INTEGRAL_FORMS:
            worst_int = max(worst_int, abs(exact.p_t1_before_t2_integral(m, form) - float(dp)))
        sim = estimate(m, SimConfig(seed=1000 + i, trials=10**6))
        p = float(dp)
        se = math.sqrt(p * (1 - p) / sim.trials)
        worst_z = max(worst_z, abs(sim.first_freq[0] - p) / se)
    ok = sum_dp_bad == 0 and worst_int < 1e-8 and worst_z < 4
    return ok, f"sum!=dp in {sum_dp_bad}; max |integral-dp| {worst_int:.1e} (<1e-8); max MC |z| {worst_z:.2f} (<4)", 300


def lemma_vs_subset_sum():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(30):
        n = int(rng.integers(1, 13))
        raw = [int(w) for w in rng.integers(1, 31, size=n)]
        q = [Fraction(w, sum(raw)) for w in raw]
        for r in (0.5, 1, 2, 3.7):
            a = exact.rising_moment(q, r)
            b = float(exact.rising_moment_subset_sum(q, r))
            worst = max(worst, abs(a - b) / abs(b))
    return worst < 1e-8, f"max relative gap {worst:.1e} (<1e-8)", 60


def uniform_closed_forms():
    worst = 0.0
    for N in range(1, 201):
        q = [Fraction(1, N)] * N
        worst = max(
            worst,
            abs(exact.rising_moment(q, 1) / exact.uniform_mean(N) - 1),
            abs(exact.rising_moment(q, 2) / exact.uniform_second_rising(N) - 1),
        )
    return worst < 1e-8, f"max relative gap {worst:.1e} over N=1..200 (<1e-8)", 60


def first_detection_convergence():
    ratios = []
    for M in (5, 10, 20, 40, 80):
        f = ScalingFamily(1, 1, 2, M)
        ratios.append(exact.p_t1_before_t2_integral(mixture_from_scaling(f), "ratio") / asy.p_first_asymptotic(f))
    gaps = [abs(r - 1) for r in ratios]
    ok = gaps[-1] < 0.15 and all(b < a for a, b in zip(gaps, gaps[1:]))
    return ok, "ratios " + ", ".join(f"{r:.4f}" for r in ratios) + " (last within 15%, gaps decreasing)", 120


def mean_at_desk_scale():
    f = ScalingFamily(1, 1, 3, 50)
    s = estimate(mixture_from_scaling(f), SimConfig(seed=6, trials=10**5))
    pred = f.c1 * f.M * exact.harmonic(f.M1)
    details, ok = [], True
    for which in ("T1", "T"):
        st = s.stats[which]
        allowed = 3 * st.se_mean + 0.05 * pred
        ok &= abs(st.mean - pred) <= allowed
        details.append(f"{which}: {st.mean:.2f} vs {pred:.2f} (|diff| {abs(st.mean - pred):.2f} <= {allowed:.2f})")
    return ok, "; ".join(details), 120


def variance_at_desk_scale():
    f = ScalingFamily(1, 1, 3, 100)
    s = estimate(mixture_from_scaling(f), SimConfig(seed=7, trials=10**5))
    pred = math.pi**2 * f.c1**2 * f.M**2 / 6
    rel = s.stats["T"].var / pred - 1
    return abs(rel) < 0.15, f"V[T] {s.stats['T'].var:.4g} vs {pred:.4g}, relative gap {rel:+.3f} (|.|<0.15)", 180


def gumbel_limits():
    cases = {
        "uniform N=1000": (GroupMixture((1000,), (Fraction(1, 1000),)), dict(which="S_N_uniform", N=1000)),
        "theta=0.3 N=1000": (
            ThetaExample(1000, Fraction(3, 10)).to_mixture(),
            dict(which="S_theta", theta=ThetaExample(1000, Fraction(3, 10))),
        ),
        "T at (1,1,2,500)": (
            mixture_from_scaling(ScalingFamily(1, 1, 2, 500)),
            dict(which="T", family=ScalingFamily(1, 1, 2, 500)),
        ),
    }
    ok, parts = True, []
    for i, (name, (m, norm)) in enumerate(cases.items()):
        s = estimate(m, SimConfig(seed=80 + i, trials=10**4, retain_samples="T"))
        which = norm.pop("which")
        ks = ks_statistic(normalized_samples(s.column("T"), which, **norm), gumbel_cdf)
        if ks.passes(0.05):
            verdict = "pass"
        elif ks.passes(0.01):
            # finite-size miss: tolerated up to the looser 1% value, with a warning
            verdict = "soft-fail"
            warnings.warn(f"{name}: KS {ks.D:.4f} above the 5% value but below the 1% value", stacklevel=1)
        else:
            verdict, ok = "fail", False
        parts.append(f"{name} D={ks.D:.4f} {verdict}")
    return ok, "; ".join(parts) + f" (5% value {1.36 / 100:.4f})", 300


def gamma_derivative_constants():
    closed = [
        -EULER_GAMMA,
        math.pi**2 / 6 + EULER_GAMMA**2,
        -(2 * ZETA3 + math.pi**2 * EULER_GAMMA / 2 + EULER_GAMMA**3),
    ]
    worst = max(abs(asy.gamma_derivative_quadrature(k) - c) for k, c in zip((1, 2, 3), closed))
    return worst < 1e-9, f"max |quadrature - closed form| {worst:.1e} (<1e-9)", 10


def uniform_series_sanity():
    N = 500
    exact_mean = exact.uniform_mean(N)
    first = asy.uniform_rising_moment_series(N, 1, 1).value
    corrected = first + N / (2 * N)
    g1, g2 = abs(first / exact_mean - 1), abs(corrected / exact_mean - 1)
    return g1 < 0.015 and g2 < 0.001, f"n=1 gap {g1:.2e} (<1.5e-2), with 1/(2N) {g2:.2e} (<1e-3)", 1


def determinism():
    m = GroupMixture((3, 2, 1), (Fraction(1, 12), Fraction(1, 8), Fraction(1, 2)))
    outs = {w: estimate(m, SimConfig(seed=11, trials=50_000, workers=w, rising_orders=(2.0,))).to_json() for w in (1, 4, 16)}
    same = outs[1] == outs[4] == outs[16]
    return same, "JSON identical for workers 1, 4, 16" if same else "JSON differs across workers", 60


CRITERIA = [
    ("AC1", "partition of unity", partition_of_unity),
    ("AC2", "four-route agreement", four_route_agreement),
    ("AC3", "moment integral vs subset sum", lemma_vs_subset_sum),
    ("AC4", "uniform closed forms", uniform_closed_forms),
    ("AC5", "first-detection convergence", first_detection_convergence),
    ("AC6", "mean of T1 and T at (1,1,3,50)", mean_at_desk_scale),
    ("AC7", "variance of T at (1,1,3,100)", variance_at_desk_scale),
    ("AC8", "Gumbel limits", gumbel_limits),
    ("AC9", "Gamma derivative constants", gamma_derivative_constants),
    ("AC10", "uniform series sanity", uniform_series_sanity),
    ("AC11", "worker-count determinism", determinism),
]


def evaluate(check):
    start = time.perf_counter()
    ok, detail, limit = check()
    elapsed = time.perf_counter() - start
    within = elapsed < limit
    return ok and within, f"{detail}; {elapsed:.1f}s (limit {limit}s)"


@pytest.mark.parametrize("tag, title, check", CRITERIA, ids=[c[0] for c in CRITERIA])
def test_criterion(tag, title, check, capsys):
    ok, detail = evaluate(check)
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] {tag} {title}: {detail}")
    assert ok, detail


if __name__ == "__main__":
    failures = 0
    for tag, title, check in CRITERIA:
        ok, detail = evaluate(check)
        failures += not ok
        print(f"[{'PASS' if ok else 'FAIL'}] {tag} {title}: {detail}", flush=True)
    sys.exit(1 if failures else 0)
