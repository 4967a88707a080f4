"""Foundational value types: exact discrete distributions, the two quantile
functions, calibration score sequences with sentinel endpoints, and level
splits.

Scores are plain floats; the values -inf and +inf act as the extended-real
sentinels below and above every finite score. NaN is rejected everywhere.
Probability masses and levels are exact rationals (fractions.Fraction), so
quantile thresholds that sit exactly on cumulative-mass breakpoints resolve
deterministically instead of depending on float rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import (
    EmptySupport,
    MassSumNotOne,
    NaNInput,
    TauOutOfRange,
)

NEG_INF = float("-inf")
POS_INF = float("inf")

ONE = Fraction(1)
ZERO = Fraction(0)


def as_fraction(x) -> Fraction:
    """Convert a number to an exact Fraction.

    Ints, Fractions, and numeric strings convert exactly. A bare float is
    reinterpreted as the decimal literal it prints as (0.1 becomes 1/10, not
    its binary expansion), which matches what callers mean when they write
    probability levels as decimals.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if math.isnan(x):
            raise NaNInput("cannot convert NaN to a fraction")
        if math.isinf(x):
            raise TauOutOfRange("infinite value is not a valid probability")
        return Fraction(str(x))
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot convert {type(x).__name__} to Fraction")


def round_half_up(x) -> int:
    """Round an exact rational to the nearest integer, halves upward."""
    return math.floor(as_fraction(x) + Fraction(1, 2))


def ceil_fraction(x) -> int:
    """Exact ceiling of a rational."""
    return math.ceil(as_fraction(x))


def _check_real(value: float) -> float:
    value = float(value)
    if math.isnan(value):
        raise NaNInput("NaN is not an admissible value")
    return value


@dataclass(frozen=True)
class DiscreteDist:
    """A discrete distribution sum_i masses[i] * delta_{values[i]}.

    values are strictly increasing (duplicates merged at construction) and
    may include -inf or +inf; masses are positive Fractions summing exactly
    to one. Build instances through make_discrete_dist.
    """

    values: tuple[float, ...]
    masses: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if not self.values:
            raise EmptySupport("a distribution needs at least one atom")
        total = sum(self.masses, ZERO)
        if total != ONE:
            raise MassSumNotOne(f"masses sum to {total}, expected 1")

    def cdf(self, value: float) -> Fraction:
        """Exact P(X <= value)."""
        total = ZERO
        for v, p in zip(self.values, self.masses):
            if v <= value:
                total += p
            else:
                break
        return total


def make_discrete_dist(pairs: Iterable[tuple[float, object]]) -> DiscreteDist:
    """Build a DiscreteDist from (value, mass) pairs.

    Masses at equal values are merged; zero-mass atoms are dropped; the total
    mass must be exactly one.
    """
    merged: dict[float, Fraction] = {}
    for value, mass in pairs:
        value = _check_real(value)
        frac = as_fraction(mass)
        if frac < 0:
            raise MassSumNotOne(f"negative mass {frac} at value {value}")
        merged[value] = merged.get(value, ZERO) + frac
    items = sorted((v, p) for v, p in merged.items() if p > 0)
    if not items:
        raise EmptySupport("a distribution needs at least one atom")
    values = tuple(v for v, _ in items)
    masses = tuple(p for _, p in items)
    return DiscreteDist(values, masses)


def uniform_dist(values: Sequence[float]) -> DiscreteDist:
    """Uniform distribution over a multiset of values."""
    n = len(values)
    if n == 0:
        raise EmptySupport("a distribution needs at least one atom")
    w = Fraction(1, n)
    return make_discrete_dist((v, w) for v in values)


def quantile_lower(dist: DiscreteDist, tau) -> float:
    """Q_tau(P) = inf{t : P(X <= t) >= tau}, for 0 < tau <= 1.

    Returns the smallest atom whose exact cumulative mass reaches tau.
    """
    tau = as_fraction(tau)
    if not ZERO < tau <= ONE:
        raise TauOutOfRange(f"quantile_lower needs 0 < tau <= 1, got {tau}")
    cumulative = ZERO
    for value, mass in zip(dist.values, dist.masses):
        cumulative += mass
        if cumulative >= tau:
            return value
    raise AssertionError("unreachable: masses sum to one")


def quantile_upper_tail(dist: DiscreteDist, tau) -> float:
    """Q'_tau(P) = sup{t : P(X >= t) >= 1 - tau}, for 0 <= tau < 1.

    Returns the largest atom whose exact upper-tail mass is at least 1 - tau.
    Satisfies the mirror identity Q'_tau(P) = -Q_{1-tau}(-P).
    """
    tau = as_fraction(tau)
    if not ZERO <= tau < ONE:
        raise TauOutOfRange(f"quantile_upper_tail needs 0 <= tau < 1, got {tau}")
    target = ONE - tau
    tail = ZERO
    for value, mass in zip(reversed(dist.values), reversed(dist.masses)):
        tail += mass
        if tail >= target:
            return value
    raise AssertionError("unreachable: masses sum to one")


UNBOUNDED_RANGE: tuple[float, float] = (NEG_INF, POS_INF)


@dataclass(frozen=True)
class CalibrationScores:
    """Calibration scores with their order statistics and sentinel endpoints.

    order_stat(0) is the lower end of score_range (inf s) and order_stat(n+1)
    is the upper end (sup s); indices 1..n are the sorted scores. The default
    range is the whole extended real line; bounded score functions (outcomes
    in [0, 1], say) should pass their range so the sentinels are finite.
    """

    raw: tuple[float, ...]
    sorted_scores: tuple[float, ...] = field(default=())
    score_range: tuple[float, float] = UNBOUNDED_RANGE

    def __post_init__(self) -> None:
        raw = tuple(_check_real(v) for v in self.raw)
        lo, hi = self.score_range
        if math.isnan(lo) or math.isnan(hi):
            raise NaNInput("score_range must not contain NaN")
        if lo > hi:
            raise NaNInput(f"score_range lower bound {lo} exceeds upper bound {hi}")
        for v in raw:
            if math.isinf(v):
                raise NaNInput("calibration scores must be finite")
            if not lo <= v <= hi:
                raise NaNInput(f"score {v} lies outside score_range [{lo}, {hi}]")
        object.__setattr__(self, "raw", raw)
        object.__setattr__(self, "sorted_scores", tuple(sorted(raw)))
        object.__setattr__(self, "score_range", (float(lo), float(hi)))

    @property
    def n(self) -> int:
        return len(self.raw)

    def order_stat(self, index: int) -> float:
        """S_(index) for index in {0, ..., n+1}, with sentinel endpoints."""
        if index == 0:
            return self.score_range[0]
        if index == self.n + 1:
            return self.score_range[1]
        if 1 <= index <= self.n:
            return self.sorted_scores[index - 1]
        raise IndexError(f"order statistic index {index} outside 0..{self.n + 1}")

    def extended(self) -> tuple[float, ...]:
        """The n+2 values S_(0), S_(1), ..., S_(n), S_(n+1)."""
        return (self.score_range[0],) + self.sorted_scores + (self.score_range[1],)


def order_statistics(
    raw: Sequence[float], score_range: tuple[float, float] = UNBOUNDED_RANGE
) -> CalibrationScores:
    """Sort raw scores and install the sentinel endpoints.

    An empty input is allowed (n = 0, only sentinels), which is what a fully
    rejected calibration set produces downstream.
    """
    return CalibrationScores(raw=tuple(raw), score_range=score_range)


@dataclass(frozen=True)
class Levels:
    """An exact split alpha = beta + gamma of the miscoverage budget.

    beta feeds the lower endpoint (Q'_beta) and gamma the upper (Q_{1-gamma}).
    Any two of the three determine the third; passing all three asserts
    consistency. beta = 0 gives a one-sided upper interval and gamma = 0 a
    one-sided lower interval.
    """

    alpha: Fraction = None  # type: ignore[assignment]
    beta: Fraction = None  # type: ignore[assignment]
    gamma: Fraction = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        alpha = None if self.alpha is None else as_fraction(self.alpha)
        beta = None if self.beta is None else as_fraction(self.beta)
        gamma = None if self.gamma is None else as_fraction(self.gamma)
        given = sum(x is not None for x in (alpha, beta, gamma))
        if given < 2:
            raise TauOutOfRange("Levels needs at least two of alpha, beta, gamma")
        if alpha is None:
            alpha = beta + gamma
        elif beta is None:
            beta = alpha - gamma
        elif gamma is None:
            gamma = alpha - beta
        if beta + gamma != alpha:
            raise TauOutOfRange(
                f"levels must satisfy beta + gamma = alpha exactly; "
                f"got beta={beta}, gamma={gamma}, alpha={alpha}"
            )
        if not (ZERO <= beta < ONE and ZERO <= gamma < ONE and ZERO <= alpha <= ONE):
            raise TauOutOfRange(
                f"levels out of range: alpha={alpha}, beta={beta}, gamma={gamma}"
            )
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "gamma", gamma)

    @classmethod
    def symmetric(cls, alpha) -> "Levels":
        a = as_fraction(alpha)
        return cls(alpha=a, beta=a / 2, gamma=a / 2)

    @classmethod
    def one_sided_upper(cls, alpha) -> "Levels":
        a = as_fraction(alpha)
        return cls(alpha=a, beta=ZERO, gamma=a)

    @classmethod
    def one_sided_lower(cls, alpha) -> "Levels":
        a = as_fraction(alpha)
        return cls(alpha=a, beta=a, gamma=ZERO)


@dataclass(frozen=True)
class PredictionInterval:
    """A closed interval [lower, upper] with the levels that produced it."""

    lower: float
    upper: float
    levels: Levels | None = None

    def __post_init__(self) -> None:
        lower = float(self.lower)
        upper = float(self.upper)
        if math.isnan(lower) or math.isnan(upper):
            raise NaNInput("interval endpoints must not be NaN")
        if lower > upper:
            raise ValueError(f"interval lower {lower} exceeds upper {upper}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    def covers(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    @property
    def width(self) -> float:
        return self.upper - self.lower
