"""Closed-form batch prediction intervals for quantiles of the test batch.

For the zeta-th smallest of m test scores the rank distribution over the
calibration sample has an explicit pmf, so the interval needs no search:
it is [S_(q_L - 1), S_(q_U)] with q_L and q_U exact pmf quantiles. The same
idea extends to any function of a few test order statistics through
level-set counts, and to simultaneous bounds on several quantiles through
box counts with a symmetric expansion search.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .combinatorics import (
    box_count,
    level_set_count,
    quantile_rank_pmf,
    rank_simplex_size,
)
from .core import (
    ONE,
    CalibrationScores,
    Levels,
    PredictionInterval,
    as_fraction,
    ceil_fraction,
    make_discrete_dist,
    quantile_lower,
    quantile_upper_tail,
    round_half_up,
)
from .engine import BatchScoreFn, RankOrderFn
from .errors import (
    NoFeasibleRank,
    ShapeMismatch,
    SparsityCapExceeded,
    TauOutOfRange,
    ZetaOutOfRange,
)

SPARSE_LENGTH_CAP = 3

BINARY_SEARCH_THRESHOLD = 1000


@dataclass(frozen=True)
class QuantileTarget:
    """The zeta-th smallest test score as the inference target, where
    zeta = ceil((1 - delta) * m) tracks the batch (1 - delta)-quantile.
    """

    delta: Fraction
    zeta: int

    def __post_init__(self) -> None:
        delta = as_fraction(self.delta)
        object.__setattr__(self, "delta", delta)
        if not 0 <= delta < 1:
            raise TauOutOfRange(f"delta must lie in [0, 1), got {delta}")
        if self.zeta < 1:
            raise ZetaOutOfRange(f"zeta must be at least 1, got {self.zeta}")

    @classmethod
    def for_batch(cls, delta, m: int) -> "QuantileTarget":
        """Target the (1 - delta)-quantile of a batch of size m."""
        delta = as_fraction(delta)
        zeta = ceil_fraction((ONE - delta) * m)
        if not 1 <= zeta <= m:
            raise ZetaOutOfRange(
                f"delta {delta} gives rank {zeta} outside 1..{m}"
            )
        return cls(delta=delta, zeta=zeta)


@dataclass(frozen=True)
class MultiQuantileBounds:
    """Componentwise bounds L_j <= S_(t_j of the batch) <= U_j holding
    simultaneously with probability at least 1 - alpha.
    """

    L: tuple[float, ...]
    U: tuple[float, ...]
    t_list: tuple[int, ...]

    def __post_init__(self) -> None:
        if not (len(self.L) == len(self.U) == len(self.t_list)):
            raise ShapeMismatch("L, U, t_list must have equal lengths")
        for j in range(len(self.L)):
            if self.L[j] > self.U[j]:
                raise ValueError(f"component {j}: L={self.L[j]} exceeds U={self.U[j]}")
        for j in range(len(self.L) - 1):
            if self.L[j] > self.L[j + 1] or self.U[j] > self.U[j + 1]:
                raise ValueError("bounds must be non-decreasing along t_list")


def quantile_interval(
    scores: CalibrationScores, m: int, target: QuantileTarget, levels: Levels
) -> PredictionInterval:
    """Two-sided interval for the target.zeta-th smallest of m test scores:
    [S_(q_L - 1), S_(q_U)] with q_L, q_U exact quantiles of the rank pmf.
    Equals batch_pi with h = the zeta-th coordinate and h~(r) = r_(zeta).
    """
    if not 1 <= target.zeta <= m:
        raise ZetaOutOfRange(
            f"target rank {target.zeta} does not fit batch size {m}"
        )
    pmf = quantile_rank_pmf(scores.n, m, target.zeta)
    q_lower = int(quantile_upper_tail(pmf, levels.beta))
    q_upper = int(quantile_lower(pmf, ONE - levels.gamma))
    return PredictionInterval(
        lower=scores.order_stat(q_lower - 1),
        upper=scores.order_stat(q_upper),
        levels=levels,
    )


def coverage_upper_epsilon(n: int, m: int, zeta: int) -> Fraction:
    """The overshoot of the quantile interval's coverage above its nominal
    level: coverage <= 1 - alpha + epsilon with epsilon the largest atom of
    the rank pmf, an O(1/n) quantity.
    """
    pmf = quantile_rank_pmf(n, m, zeta)
    return max(pmf.masses)


def sparse_batch_pi(
    scores: CalibrationScores,
    m: int,
    t_list: Sequence[int],
    h_prime: BatchScoreFn,
    order_prime: RankOrderFn,
    levels: Levels,
    length_cap: int = SPARSE_LENGTH_CAP,
) -> PredictionInterval:
    """Batch interval for h(s) = h'(s_(t_1), ..., s_(t_l)), a function of
    l of the m test order statistics.

    The law of h~ over the rank simplex collapses onto the l pinned
    coordinates: each non-decreasing l-tuple rho of ranks carries the
    level-set count of rank vectors pinned there, so the quantiles come
    from a distribution over O(n^l) points and the endpoints from a
    min/max over the same tuples, with the usual index shift on the
    lower side.
    """
    t = tuple(t_list)
    l = len(t)
    if l > length_cap:
        raise SparsityCapExceeded(
            f"sparse interval supports up to {length_cap} pinned coordinates, "
            f"got {l}"
        )
    if l == 0:
        raise ShapeMismatch("t_list must be nonempty")
    if any(t[j] >= t[j + 1] for j in range(l - 1)) or not (
        1 <= t[0] and t[-1] <= m
    ):
        raise ShapeMismatch(
            f"t_list must be strictly increasing within 1..{m}, got {t}"
        )
    if h_prime.m != l or order_prime.m != l:
        raise ShapeMismatch(
            f"h_prime and order_prime must take {l}-tuples, "
            f"got {h_prime.m} and {order_prime.m}"
        )
    n = scores.n
    total = rank_simplex_size(n, m)
    tuples = list(itertools.combinations_with_replacement(range(1, n + 2), l))
    weights = [level_set_count(n, m, t, rho) for rho in tuples]
    values = [float(order_prime.evaluate(rho)) for rho in tuples]
    dist = make_discrete_dist(
        [(v, Fraction(w, total)) for v, w in zip(values, weights)]
    )
    q_lower = float(quantile_upper_tail(dist, levels.beta))
    q_upper = float(quantile_lower(dist, ONE - levels.gamma))
    ext = scores.extended()
    lower = None
    upper = None
    for rho, value in zip(tuples, values):
        if value >= q_lower:
            cand = h_prime.evaluate(tuple(ext[j - 1] for j in rho))
            lower = cand if lower is None else min(lower, cand)
        if value <= q_upper:
            cand = h_prime.evaluate(tuple(ext[j] for j in rho))
            upper = cand if upper is None else max(upper, cand)
    if lower is None or upper is None:
        raise NoFeasibleRank("quantile constraints exclude every pinned tuple")
    return PredictionInterval(lower=lower, upper=upper, levels=levels)


def _minimal_expansion(
    n: int, feasible, hi: int
) -> int:
    """Smallest a in 0..hi with feasible(a) true; feasible is monotone.
    Linear scan at small n, binary search above the threshold.
    """
    if n <= BINARY_SEARCH_THRESHOLD:
        for a in range(hi + 1):
            if feasible(a):
                return a
        raise ValueError("expansion search failed; the full box must be feasible")
    lo, high = 0, hi
    while lo < high:
        mid = (lo + high) // 2
        if feasible(mid):
            high = mid
        else:
            lo = mid + 1
    return lo


def multi_quantile_bounds(
    scores: CalibrationScores, m: int, t_list: Sequence[int], alpha
) -> MultiQuantileBounds:
    """Simultaneous bounds on the t_j-th smallest test scores.

    Centers a box at t~_j = round(t_j * n / m) (half-up) and grows a
    symmetric expansion a until the box holds at least (1 - alpha) of the
    rank simplex, then reads the bounds off the calibration order
    statistics: L_j = S_(max(t~_j - a - 1, 0)), U_j = S_(min(t~_j + a, n+1)).
    """
    alpha = as_fraction(alpha)
    if not 0 < alpha < 1:
        raise TauOutOfRange(f"alpha must lie in (0, 1), got {alpha}")
    t = tuple(t_list)
    if not t:
        raise ShapeMismatch("t_list must be nonempty")
    if any(t[j] >= t[j + 1] for j in range(len(t) - 1)) or not (
        1 <= t[0] and t[-1] <= m
    ):
        raise ShapeMismatch(
            f"t_list must be strictly increasing within 1..{m}, got {t}"
        )
    n = scores.n
    total = rank_simplex_size(n, m)
    threshold = (ONE - alpha) * total
    centers = [round_half_up(Fraction(tj * n, m)) for tj in t]

    def feasible(a: int) -> bool:
        w = tuple(max(c - a, 1) for c in centers)
        q = tuple(min(c + a, n + 1) for c in centers)
        if any(qj < 1 or wj > qj for wj, qj in zip(w, q)):
            return False
        return box_count(n, m, t, w, q) >= threshold

    a = _minimal_expansion(n, feasible, n + 1)
    lower = tuple(scores.order_stat(max(c - a - 1, 0)) for c in centers)
    upper = tuple(scores.order_stat(min(c + a, n + 1)) for c in centers)
    return MultiQuantileBounds(L=lower, U=upper, t_list=t)


def quartile_bounds(
    scores: CalibrationScores, m: int, alpha
) -> tuple[float, float]:
    """(L, U) with P(L <= batch lower quartile and batch upper quartile <= U)
    at least 1 - alpha, targeting the round(0.25 m)-th and round(0.75 m)-th
    smallest test scores (half-up rounding).

    Uses the one-sided box: only the lower quartile's floor and the upper
    quartile's ceiling are constrained, so the expansion needed is no larger
    than the full two-sided box's. A valid interquartile-range bound
    IQR <= U - L follows.
    """
    alpha = as_fraction(alpha)
    if not 0 < alpha < 1:
        raise TauOutOfRange(f"alpha must lie in (0, 1), got {alpha}")
    if m < 2:
        raise ShapeMismatch(f"quartile bounds need a batch of at least 2, got {m}")
    n = scores.n
    t1 = round_half_up(Fraction(1, 4) * m)
    t2 = round_half_up(Fraction(3, 4) * m)
    c1 = round_half_up(Fraction(1, 4) * n)
    c2 = round_half_up(Fraction(3, 4) * n)
    total = rank_simplex_size(n, m)
    threshold = (ONE - alpha) * total

    def feasible(a: int) -> bool:
        top = min(c2 + a, n + 1)
        w1 = max(c1 - a, 1)
        if top < 1 or w1 > top:
            return False
        return box_count(n, m, (t1, t2), (w1, 1), (top, top)) >= threshold

    a = _minimal_expansion(n, feasible, n + 1)
    lower = scores.order_stat(max(c1 - a - 1, 0))
    upper = scores.order_stat(min(c2 + a, n + 1))
    return lower, upper
