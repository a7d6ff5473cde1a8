"""Mixture configurations: uniform coupon groups and the two-group scaling family."""

from __future__ import annotations

import json
import math
import numbers
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Sequence, Union

__all__ = [
    "FLOAT_TOLERANCE",
    "GroupMixture",
    "InvalidMixture",
    "ScalingFamily",
    "ThetaExample",
    "bounding_two_group_mixtures",
    "load_config",
    "mixture_from_scaling",
    "parse_groups",
    "parse_lambda",
    "parse_prob",
    "parse_scaling",
    "validate",
]

Prob = Union[Fraction, float]

FLOAT_TOLERANCE = 1e-12


class InvalidMixture(ValueError):
    """A mixture violates one of its invariants.

    ``residual`` holds sum_j M_j p_j - 1 when that is the failing check.
    """

    def __init__(self, message: str, residual: Prob | None = None):
        super().__init__(message)
        self.residual = residual


def parse_prob(value: Any) -> Prob:
    """Exact Fraction for ints, Fractions and strings; float stays float."""
    if isinstance(value, bool):
        raise InvalidMixture(f"probability must be numeric, got {value!r}")
    if isinstance(value, (Fraction, int)):
        return Fraction(value)
    if isinstance(value, numbers.Rational):
        return Fraction(value.numerator, value.denominator)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidMixture(f"cannot parse probability {value!r}") from exc
    if isinstance(value, numbers.Real):
        return float(value)
    raise InvalidMixture(f"probability must be numeric, got {value!r}")


@dataclass(frozen=True)
class GroupMixture:
    """A pool of ``g`` uniform groups: ``counts[j]`` coupons of probability ``probs[j]`` each."""

    counts: tuple[int, ...]
    probs: tuple[Prob, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        object.__setattr__(self, "probs", tuple(parse_prob(p) for p in self.probs))
        if len(self.counts) != len(self.probs):
            raise InvalidMixture("counts and probs differ in length")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, Any]]) -> GroupMixture:
        pairs = list(pairs)
        return cls(tuple(c for c, _ in pairs), tuple(p for _, p in pairs))

    @property
    def g(self) -> int:
        return len(self.counts)

    @property
    def total_coupons(self) -> int:
        return sum(self.counts)

    @property
    def is_rational(self) -> bool:
        return all(isinstance(p, Fraction) for p in self.probs)

    @property
    def float_probs(self) -> tuple[float, ...]:
        return tuple(float(p) for p in self.probs)

    @property
    def group_weights(self) -> tuple[float, ...]:
        """Probability that a draw lands in each group, M_j p_j."""
        return tuple(c * float(p) for c, p in zip(self.counts, self.probs))

    def integer_weights(self) -> tuple[tuple[int, ...], int]:
        """Common-denominator form: p_j = a_j / D with integers a_j. Rational mixtures only."""
        if not self.is_rational:
            raise TypeError("integer weights need rational probabilities")
        den = math.lcm(*(p.denominator for p in self.probs))
        return tuple(int(p * den) for p in self.probs), den

    def coupon_probs(self) -> list[Prob]:
        """Per-coupon probability vector with each group expanded."""
        out: list[Prob] = []
        for c, p in zip(self.counts, self.probs):
            out.extend([p] * c)
        return out

    def swapped(self) -> GroupMixture:
        return GroupMixture(self.counts[::-1], self.probs[::-1])

    def to_dict(self) -> dict:
        return {"groups": [{"count": c, "prob": _prob_to_json(p)} for c, p in zip(self.counts, self.probs)]}

    def __str__(self) -> str:
        return ",".join(f"{c}:{_prob_to_json(p)}" for c, p in zip(self.counts, self.probs))


def _prob_to_json(p: Prob) -> str | float:
    if isinstance(p, Fraction):
        return str(p)
    return p


def validate(m: GroupMixture) -> None:
    """Raise :class:`InvalidMixture` unless ``m`` is a well-formed pool."""
    if m.g < 1:
        raise InvalidMixture("a mixture needs at least one group")
    for j, (c, p) in enumerate(zip(m.counts, m.probs), start=1):
        if c < 1:
            raise InvalidMixture(f"group {j}: count must be >= 1, got {c}")
        if not p > 0:
            raise InvalidMixture(f"group {j}: probability must be > 0, got {p}")
    if m.is_rational:
        residual = sum((c * p for c, p in zip(m.counts, m.probs)), Fraction(0)) - 1
        if residual != 0:
            raise InvalidMixture(f"sum of M_j p_j differs from 1 by {residual}", residual)
    else:
        residual = math.fsum(c * float(p) for c, p in zip(m.counts, m.probs)) - 1.0
        if abs(residual) > FLOAT_TOLERANCE:
            raise InvalidMixture(f"sum of M_j p_j differs from 1 by {residual:.3e}", residual)


@dataclass(frozen=True)
class ScalingFamily:
    """Two groups of ``nu1*M`` and ``nu2*M`` coupons whose probability ratio p2/p1 is ``lam``."""

    nu1: int
    nu2: int
    lam: Prob
    M: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "lam", parse_prob(self.lam))
        for name in ("nu1", "nu2", "M"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise InvalidMixture(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if not self.lam > 0:
            raise InvalidMixture(f"lambda must be > 0, got {self.lam}")

    @property
    def M1(self) -> int:
        return self.nu1 * self.M

    @property
    def M2(self) -> int:
        return self.nu2 * self.M

    @property
    def alpha1(self) -> Prob:
        return self.nu1 / (self.nu1 + self.lam * self.nu2)

    @property
    def alpha2(self) -> Prob:
        return self.lam * self.nu2 / (self.nu1 + self.lam * self.nu2)

    @property
    def c1(self) -> float:
        """Time scale of group 1, nu1 + lam*nu2 (= nu1/alpha1)."""
        return self.nu1 + float(self.lam) * self.nu2

    @property
    def c2(self) -> float:
        """Time scale of group 2, nu1/lam + nu2 (= nu2/alpha2)."""
        return self.nu1 / float(self.lam) + self.nu2

    def with_M(self, M: int) -> ScalingFamily:
        return ScalingFamily(self.nu1, self.nu2, self.lam, M)

    def swapped(self) -> ScalingFamily:
        return ScalingFamily(self.nu2, self.nu1, 1 / self.lam, self.M)


def mixture_from_scaling(f: ScalingFamily) -> GroupMixture:
    """The two-group pool with p1 = alpha1/M1 and p2 = alpha2/M2."""
    if not f.lam > 0:
        raise InvalidMixture(f"lambda must be > 0, got {f.lam}")
    return GroupMixture((f.M1, f.M2), (f.alpha1 / f.M1, f.alpha2 / f.M2))


@dataclass(frozen=True)
class ThetaExample:
    """Coupons {0..N}: coupon 0 has probability theta, the other N share 1 - theta equally."""

    N: int
    theta: Prob

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta", parse_prob(self.theta))
        if int(self.N) != self.N or self.N < 1:
            raise InvalidMixture(f"N must be a positive integer, got {self.N!r}")
        if not 0 < self.theta < 1:
            raise InvalidMixture(f"theta must lie in (0, 1), got {self.theta}")

    def to_mixture(self) -> GroupMixture:
        return GroupMixture((1, self.N), (self.theta, (1 - self.theta) / self.N))

    def coupon_probs(self) -> list[Prob]:
        return [self.theta] + [(1 - self.theta) / self.N] * self.N


def bounding_two_group_mixtures(m: GroupMixture) -> tuple[GroupMixture, GroupMixture]:
    """Two-group pools bracketing a g-group pool.

    Groups are sorted by probability.  The smallest-probability group is kept;
    all remaining coupons are pooled at the second-smallest level (case i) or
    the largest level (case ii).  Pooling breaks sum M_j p_j = 1, so both
    probabilities are rescaled with their ratio held fixed.  The stochastic
    ordering between the results and ``m`` is not guaranteed by this code.
    """
    validate(m)
    if m.g < 2:
        raise InvalidMixture("bounding mixtures need at least two groups")
    order = sorted(range(m.g), key=lambda j: m.probs[j])
    counts = [m.counts[j] for j in order]
    probs = [m.probs[j] for j in order]
    rest = sum(counts[1:])

    def pooled(level: Prob) -> GroupMixture:
        ratio = level / probs[0]
        p1 = 1 / (counts[0] + rest * ratio)
        return GroupMixture((counts[0], rest), (p1, ratio * p1))

    return pooled(probs[1]), pooled(probs[-1])


# -- parsing -------------------------------------------------------------------


def parse_groups(text: str) -> GroupMixture:
    """Inline syntax ``count:prob[,count:prob...]``, e.g. ``"2:1/4,1:1/2"``."""
    pairs = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        count, sep, prob = item.partition(":")
        if not sep:
            raise InvalidMixture(f"group {item!r} is not of the form count:prob")
        try:
            pairs.append((int(count), parse_prob(prob)))
        except ValueError as exc:
            raise InvalidMixture(f"bad group {item!r}") from exc
    if not pairs:
        raise InvalidMixture("no groups given")
    m = GroupMixture.from_pairs(pairs)
    validate(m)
    return m


def parse_scaling(text: str) -> ScalingFamily:
    """Inline syntax ``nu1,nu2,lambda,M``."""
    parts = [s.strip() for s in text.split(",")]
    if len(parts) != 4:
        raise InvalidMixture(f"scaling must be nu1,nu2,lambda,M; got {text!r}")
    try:
        nu1, nu2, M = int(parts[0]), int(parts[1]), int(parts[3])
    except ValueError as exc:
        raise InvalidMixture(f"bad scaling {text!r}") from exc
    return ScalingFamily(nu1, nu2, parse_lambda(parts[2]), M)


def parse_lambda(value: Any) -> Prob:
    if isinstance(value, str) and not any(ch in value for ch in ".eE"):
        return parse_prob(value)
    return parse_prob(float(value) if isinstance(value, str) else value)


def config_from_dict(data: dict) -> GroupMixture | ScalingFamily:
    if "groups" in data:
        groups: Sequence[dict] = data["groups"]
        try:
            m = GroupMixture.from_pairs((int(g["count"]), parse_prob(g["prob"])) for g in groups)
        except (KeyError, TypeError) as exc:
            raise InvalidMixture(f"malformed groups entry: {exc}") from exc
        validate(m)
        return m
    if "scaling" in data:
        s = data["scaling"]
        try:
            return ScalingFamily(s["nu1"], s["nu2"], parse_lambda(s["lambda"]), s["M"])
        except (KeyError, TypeError) as exc:
            raise InvalidMixture(f"malformed scaling entry: {exc}") from exc
    raise InvalidMixture("config needs a 'groups' or 'scaling' key")


def load_config(path: str | Path) -> GroupMixture | ScalingFamily:
    """Read a JSON config holding either ``groups`` or ``scaling``."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidMixture(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise InvalidMixture(f"{path}: top level must be an object")
    return config_from_dict(data)
