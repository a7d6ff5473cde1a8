"""Seeded, reproducible simulation of the coupon process.

Each trial draws from its own counter-based stream: draw ``k`` of trial ``i``
is ``mix(key_i + k * golden)`` with ``key_i`` derived from ``(seed, i)``
(SplitMix64 finalizer).  Trials are processed in fixed-size chunks whose
statistics are merged in chunk order, so a summary depends only on the seed
and trial count, never on how chunks were spread over worker threads.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np
from scipy import special

from .model import GroupMixture, ScalingFamily, ThetaExample, validate

__all__ = [
    "CHUNK_TRIALS",
    "EmpiricalSummary",
    "RunningMoments",
    "SimConfig",
    "TrialOutcome",
    "estimate",
    "normalized_samples",
    "simulate_trial",
    "simulate_times",
]

CHUNK_TRIALS = 4096
MAX_DRAWS = 10**9
MAX_RETAINED = 10**6
THREADS_ENV = "COUPON_MIXTURE_THREADS"

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


@numba.njit(inline="always")
def _mix(z):  # pragma: no cover - compiled
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@numba.njit(inline="always")
def _unit(z):  # pragma: no cover - compiled
    return (z >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@numba.njit(cache=True, nogil=True)
def _simulate_block(seed, start, stop, counts, cum_weights, offsets, max_draws):  # pragma: no cover
    g = counts.shape[0]
    total = offsets[g]
    out = np.zeros((stop - start, g), dtype=np.int64)
    seen = np.zeros(total, dtype=np.bool_)
    got = np.zeros(g, dtype=np.int64)
    key0 = _mix(np.uint64(seed) ^ _GOLDEN)
    for trial in range(start, stop):
        row = trial - start
        seen[:] = False
        got[:] = 0
        state = _mix(key0 + _mix(np.uint64(trial) + _GOLDEN))
        done = 0
        draw = 0
        while done < g:
            draw += 1
            if draw > max_draws:
                out[row, 0] = -1
                break
            j = 0
            if g > 1:
                state += _GOLDEN
                u = _unit(_mix(state))
                while j < g - 1 and u >= cum_weights[j]:
                    j += 1
            state += _GOLDEN
            idx = int(_unit(_mix(state)) * counts[j])
            if idx >= counts[j]:
                idx = counts[j] - 1
            pos = offsets[j] + idx
            if not seen[pos]:
                seen[pos] = True
                got[j] += 1
                if got[j] == counts[j]:
                    out[row, j] = draw
                    done += 1
    return out


def _kernel_inputs(m: GroupMixture):
    counts = np.array(m.counts, dtype=np.int64)
    weights = np.array(m.group_weights)
    cum = np.cumsum(weights)
    cum /= cum[-1]
    offsets = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)
    return counts, cum, offsets


def simulate_times(m: GroupMixture, seed: int, start: int, stop: int) -> np.ndarray:
    """Group completion draw indices T_j for trials ``start..stop-1``, shape (trials, g)."""
    counts, cum, offsets = _kernel_inputs(m)
    out = _simulate_block(np.uint64(seed % 2**64), start, stop, counts, cum, offsets, MAX_DRAWS)
    if (out[:, 0] < 0).any():
        raise RuntimeError(f"a trial exceeded {MAX_DRAWS} draws")
    return out


@dataclass(frozen=True)
class TrialOutcome:
    t_group: tuple[int, ...]

    @property
    def t_total(self) -> int:
        return max(self.t_group)

    @property
    def first_group(self) -> int:
        """1-based index of the first completed group."""
        return int(np.argmin(self.t_group)) + 1


def simulate_trial(m: GroupMixture, seed: int, trial: int = 0) -> TrialOutcome:
    """One trial from the stream keyed by ``(seed, trial)``."""
    validate(m)
    row = simulate_times(m, seed, trial, trial + 1)[0]
    outcome = TrialOutcome(tuple(int(t) for t in row))
    assert len(set(outcome.t_group)) == m.g, "group completions tie"
    return outcome


# -- streaming moments ---------------------------------------------------------


@dataclass
class RunningMoments:
    """Count, mean and central sums M2..M4 with exact pairwise merging."""

    n: int = 0
    mean: float = 0.0
    m2: float = 0.0
    m3: float = 0.0
    m4: float = 0.0

    @classmethod
    def from_array(cls, x: np.ndarray) -> RunningMoments:
        x = np.asarray(x, dtype=float)
        n = x.size
        if n == 0:
            return cls()
        mean = float(x.mean())
        d = x - mean
        d2 = d * d
        return cls(n, mean, float(d2.sum()), float((d2 * d).sum()), float((d2 * d2).sum()))

    def push(self, x: float) -> None:
        self.merge(RunningMoments(1, float(x)))

    def merge(self, other: RunningMoments) -> RunningMoments:
        if other.n == 0:
            return self
        if self.n == 0:
            self.n, self.mean, self.m2, self.m3, self.m4 = other.n, other.mean, other.m2, other.m3, other.m4
            return self
        na, nb = self.n, other.n
        n = na + nb
        delta = other.mean - self.mean
        d_n = delta / n
        m4 = (
            self.m4
            + other.m4
            + delta * d_n**3 * na * nb * (na * na - na * nb + nb * nb)
            + 6 * d_n * d_n * (na * na * other.m2 + nb * nb * self.m2)
            + 4 * d_n * (na * other.m3 - nb * self.m3)
        )
        m3 = self.m3 + other.m3 + delta * d_n * d_n * na * nb * (na - nb) + 3 * d_n * (na * other.m2 - nb * self.m2)
        m2 = self.m2 + other.m2 + delta * d_n * na * nb
        self.n, self.mean, self.m2, self.m3, self.m4 = n, self.mean + d_n * nb, m2, m3, m4
        return self

    @property
    def var(self) -> float:
        return self.m2 / (self.n - 1) if self.n > 1 else math.nan

    @property
    def se_mean(self) -> float:
        return math.sqrt(self.var / self.n) if self.n > 1 else math.nan

    @property
    def se_var(self) -> float:
        """Standard error of the sample variance from the fourth central moment."""
        n = self.n
        if n < 4:
            return math.nan
        mu4 = self.m4 / n
        s2 = self.var
        return math.sqrt(max(mu4 - s2 * s2 * (n - 3) / (n - 1), 0.0) / n)

    def as_dict(self) -> dict:
        return {"mean": self.mean, "var": self.var, "se_mean": self.se_mean, "se_var": self.se_var}


# -- estimation ------------------------------------------------------------------

RETAIN_CHOICES = ("none", "T", "all")


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    trials: int = 10_000
    workers: int = 1
    retain_samples: str = "none"
    rising_orders: tuple[float, ...] = ()
    max_retained: int = MAX_RETAINED

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.retain_samples not in RETAIN_CHOICES:
            raise ValueError(f"retain_samples must be one of {RETAIN_CHOICES}")
        if any(not r > 0 for r in self.rising_orders):
            raise ValueError("rising orders must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass
class EmpiricalSummary:
    """Monte Carlo estimates for one mixture.

    ``stats`` maps ``"T1".."Tg"`` and ``"T"`` to :class:`RunningMoments`;
    ``rising`` maps the same names to ``{r: RunningMoments}`` of Gamma(X+r)/Gamma(X).
    ``samples`` (if retained) has one row per trial: T_1..T_g, or just T.
    """

    mixture: GroupMixture
    seed: int
    trials: int
    first_counts: list[int]
    stats: dict[str, RunningMoments]
    rising: dict[str, dict[float, RunningMoments]] = field(default_factory=dict)
    samples: np.ndarray | None = None
    sample_columns: tuple[str, ...] = ()

    @property
    def first_freq(self) -> list[float]:
        return [c / self.trials for c in self.first_counts]

    def first_freq_se(self) -> list[float]:
        n = self.trials
        return [math.sqrt(f * (1 - f) / n) for f in self.first_freq]

    def column(self, name: str) -> np.ndarray:
        if self.samples is None:
            raise ValueError("samples were not retained")
        if name in self.sample_columns:
            return self.samples[:, self.sample_columns.index(name)]
        if name == "T" and self.sample_columns[: self.mixture.g] == tuple(f"T{j + 1}" for j in range(self.mixture.g)):
            return self.samples[:, : self.mixture.g].max(axis=1)
        raise ValueError(f"column {name!r} not retained (have {self.sample_columns})")

    def to_dict(self) -> dict:
        return {
            "mixture": self.mixture.to_dict(),
            "seed": self.seed,
            "trials": self.trials,
            "first_counts": self.first_counts,
            "first_freq": self.first_freq,
            "first_freq_se": self.first_freq_se(),
            "stats": {k: v.as_dict() for k, v in self.stats.items()},
            "rising": {
                k: {repr(r): {"mean": rm.mean, "se_mean": rm.se_mean} for r, rm in v.items()}
                for k, v in self.rising.items()
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _names(g: int) -> list[str]:
    return [f"T{j + 1}" for j in range(g)] + ["T"]


def _chunk_stats(times: np.ndarray, orders: Sequence[float]):
    g = times.shape[1]
    total = times.max(axis=1)
    columns = [times[:, j] for j in range(g)] + [total]
    first = np.bincount(times.argmin(axis=1), minlength=g)
    moments = [RunningMoments.from_array(c) for c in columns]
    rising = []
    for c in columns:
        cf = c.astype(float)
        rising.append([RunningMoments.from_array(np.exp(special.gammaln(cf + r) - special.gammaln(cf))) for r in orders])
    return first, moments, rising


def _effective_threads(workers: int) -> int:
    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            workers = min(workers, max(1, int(cap)))
        except ValueError:
            pass
    return workers


def estimate(m: GroupMixture, cfg: SimConfig) -> EmpiricalSummary:
    """Run ``cfg.trials`` trials and summarize.

    Worker ``w`` takes a contiguous block of chunks; chunk results are merged
    in chunk order, so the output is identical for every worker count.
    """
    validate(m)
    g = m.g
    if cfg.retain_samples == "all":
        columns = tuple(f"T{j + 1}" for j in range(g))
    elif cfg.retain_samples == "T":
        columns = ("T",)
    else:
        columns = ()
    if columns and cfg.trials * len(columns) > cfg.max_retained:
        raise ValueError(
            f"retaining {cfg.trials * len(columns)} values exceeds the cap of {cfg.max_retained}; raise max_retained"
        )

    chunks = [(a, min(a + CHUNK_TRIALS, cfg.trials)) for a in range(0, cfg.trials, CHUNK_TRIALS)]
    orders = tuple(cfg.rising_orders)

    def run(block: list[tuple[int, int]]):
        results = []
        for a, b in block:
            times = simulate_times(m, cfg.seed, a, b)
            stats = _chunk_stats(times, orders)
            kept = None
            if columns == ("T",):
                kept = times.max(axis=1, keepdims=True)
            elif columns:
                kept = times
            results.append((stats, kept))
        return results

    threads = min(_effective_threads(cfg.workers), len(chunks))
    per = -(-len(chunks) // threads)
    blocks = [chunks[i : i + per] for i in range(0, len(chunks), per)]
    if threads == 1:
        chunk_results = run(chunks)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunk_results = [r for block in pool.map(run, blocks) for r in block]

    names = _names(g)
    first_counts = np.zeros(g, dtype=np.int64)
    stats = {k: RunningMoments() for k in names}
    rising = {k: {r: RunningMoments() for r in orders} for k in names}
    kept_parts = []
    for (first, moments, rises), kept in chunk_results:
        first_counts += first
        for k, mom, rs in zip(names, moments, rises):
            stats[k].merge(mom)
            for r, rm in zip(orders, rs):
                rising[k][r].merge(rm)
        if kept is not None:
            kept_parts.append(kept)

    samples = np.concatenate(kept_parts) if kept_parts else None
    return EmpiricalSummary(
        mixture=m,
        seed=cfg.seed,
        trials=cfg.trials,
        first_counts=[int(c) for c in first_counts],
        stats=stats,
        rising=rising if orders else {},
        samples=samples,
        sample_columns=columns,
    )


# -- normalization -------------------------------------------------------------


def normalized_samples(
    samples: np.ndarray,
    which: str,
    *,
    family: ScalingFamily | None = None,
    N: int | None = None,
    theta: ThetaExample | None = None,
) -> np.ndarray:
    """Center and scale raw detection times toward the standard Gumbel limit.

    ``T1``/``T``: (x - c M ln M)/(c M) - ln nu1 with c = nu1 + lam nu2.
    ``T2``: same with c = nu1/lam + nu2 and ln nu2.
    ``S_N_uniform``: (x - N ln N)/N.  ``S_theta``: ((1-theta) x - N ln N)/N.
    """
    x = np.asarray(samples, dtype=float)
    if which in ("T1", "T", "T2"):
        if family is None:
            raise ValueError(f"{which} normalization needs a ScalingFamily")
        M = family.M
        c, nu = (family.c2, family.nu2) if which == "T2" else (family.c1, family.nu1)
        return (x - c * M * math.log(M)) / (c * M) - math.log(nu)
    if which == "S_N_uniform":
        if N is None:
            raise ValueError("S_N_uniform normalization needs N")
        return (x - N * math.log(N)) / N
    if which == "S_theta":
        if theta is None:
            raise ValueError("S_theta normalization needs a ThetaExample")
        n = theta.N
        return ((1 - float(theta.theta)) * x - n * math.log(n)) / n
    raise ValueError(f"unknown normalization {which!r}")
