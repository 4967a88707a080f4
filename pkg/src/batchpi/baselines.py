"""Comparison methods for batch predictive inference.

Each baseline here is a competitor the batch interval is measured against:
split conformal prediction applied to disjoint groups, the extension of
split conformal to all rank placements of the test batch, a
Bonferroni-style per-point correction, the Markov-inequality prediction
set rank, a bounded-difference concentration interval for the mean, and
p-value based selection with k-familywise error control.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .combinatorics import rank_simplex_size
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
)
from .engine import ENUMERATION_CAP, BatchScoreFn
from .errors import (
    EnumerationCapExceeded,
    OutcomeOutOfRange,
    ShapeMismatch,
    TauOutOfRange,
)

JIN_CANDES = "jin_candes"
JIN_REN = "jin_ren"


@dataclass(frozen=True)
class GroupedScores:
    """Calibration scores split into floor(n / m) disjoint groups of size m;
    the remainder is dropped.
    """

    groups: tuple[tuple[float, ...], ...]
    m: int

    def __post_init__(self) -> None:
        for g in self.groups:
            if len(g) != self.m:
                raise ShapeMismatch(
                    f"every group must have size {self.m}, got {len(g)}"
                )


def group_scores(
    values: Sequence[float], m: int, seed: Optional[int] = None
) -> GroupedScores:
    """Split values into floor(len / m) groups of m, taking the first
    q * m entries in the given order, or in a seed-shuffled order when a
    seed is passed.
    """
    if m < 1:
        raise ShapeMismatch(f"group size must be at least 1, got {m}")
    ordered = list(values)
    if seed is not None:
        rng = np.random.default_rng(seed)
        ordered = [ordered[i] for i in rng.permutation(len(ordered))]
    q = len(ordered) // m
    groups = tuple(
        tuple(ordered[i * m : (i + 1) * m]) for i in range(q)
    )
    return GroupedScores(groups=groups, m=m)


def partition_baseline(
    g_values: Sequence[float], levels: Levels
) -> PredictionInterval:
    """Split conformal prediction on per-group values of the target
    function: with q groups, the lower endpoint is the upper beta-quantile
    of the group values with a -inf atom added, the upper endpoint the
    (1 - gamma)-quantile with a +inf atom, all atoms weighted 1 / (q + 1).
    Trivial whenever q + 1 < 1 / alpha.
    """
    q = len(g_values)
    mass = Fraction(1, q + 1)
    lower_dist = make_discrete_dist(
        [(float(v), mass) for v in g_values] + [(float("-inf"), mass)]
    )
    upper_dist = make_discrete_dist(
        [(float(v), mass) for v in g_values] + [(float("inf"), mass)]
    )
    lower = float(quantile_upper_tail(lower_dist, levels.beta))
    upper = float(quantile_lower(upper_dist, ONE - levels.gamma))
    return PredictionInterval(lower=lower, upper=upper, levels=levels)


def extended_split_conformal(
    scores: CalibrationScores, m: int, h: BatchScoreFn, levels: Levels
) -> PredictionInterval:
    """Split conformal prediction extended to a batch: quantiles of h over
    every size-m subset of the n + m units, with the m test positions
    contributing the lower sentinel (lower endpoint) or upper sentinel
    (upper endpoint).

    A subset's h value depends only on its calibration members and how many
    test slots it uses, so subsets are aggregated by that signature with
    exact binomial weights instead of being enumerated one by one; the cap
    still applies to the nominal C(n + m, m) subset count.
    """
    if h.m != m:
        raise ShapeMismatch(f"batch score takes {h.m}-tuples, call has m={m}")
    n = scores.n
    total = rank_simplex_size(n, m)
    if total > ENUMERATION_CAP:
        raise EnumerationCapExceeded(
            f"extended split conformal spans {total} subsets (cap {ENUMERATION_CAP})"
        )
    denom = math.comb(n + m, m)
    lo, hi = scores.score_range
    lower_pairs = []
    upper_pairs = []
    for k in range(0, m + 1):
        if m - k > n:
            continue
        weight = Fraction(math.comb(m, k), denom)
        for chosen in itertools.combinations(scores.sorted_scores, m - k):
            lower_pairs.append(
                (h.evaluate(tuple(sorted(chosen + (lo,) * k))), weight)
            )
            upper_pairs.append(
                (h.evaluate(tuple(sorted(chosen + (hi,) * k))), weight)
            )
    lower_dist = make_discrete_dist(lower_pairs)
    upper_dist = make_discrete_dist(upper_pairs)
    lower = float(quantile_upper_tail(lower_dist, levels.beta))
    upper = float(quantile_lower(upper_dist, ONE - levels.gamma))
    return PredictionInterval(lower=lower, upper=upper, levels=levels)


def bonferroni_baseline(
    scores: CalibrationScores, m: int, h: BatchScoreFn, levels: Levels
) -> PredictionInterval:
    """Per-point split conformal at levels beta / m and gamma / m, with h
    applied to the m-fold repetition of each single-point bound. Trivial
    whenever n + 1 < m / alpha.
    """
    if h.m != m:
        raise ShapeMismatch(f"batch score takes {h.m}-tuples, call has m={m}")
    n = scores.n
    upper_index = ceil_fraction((ONE - levels.gamma / m) * (n + 1))
    lower_index = (n + 1) - ceil_fraction((ONE - levels.beta / m) * (n + 1))
    upper_point = scores.order_stat(upper_index)
    lower_point = scores.order_stat(lower_index)
    return PredictionInterval(
        lower=h.evaluate((lower_point,) * m),
        upper=h.evaluate((upper_point,) * m),
        levels=levels,
    )


def markov_pac_rank(n: int, m: int, delta, alpha) -> int:
    """Rank ceil((1 - delta * alpha) * (n + 1)) whose order statistic
    thresholds a Markov-inequality prediction set with the same PAC-style
    guarantee; never smaller than pac_rank and independent of m.
    """
    delta = as_fraction(delta)
    alpha = as_fraction(alpha)
    if not 0 < delta * alpha < 1:
        raise TauOutOfRange(
            f"delta * alpha must lie in (0, 1), got {delta * alpha}"
        )
    return ceil_fraction((ONE - delta * alpha) * (n + 1))


def concentration_mean_interval(
    cal_outcomes: Sequence[float], m: int, a: float, b: float, alpha
) -> PredictionInterval:
    """Bounded-difference concentration interval for the test batch mean:
    calibration mean plus or minus (b - a) * sqrt((1/n + 1/m) * log(2/alpha) / 2),
    intersected with [a, b]. Useful only when n and m are both large.
    """
    alpha_f = as_fraction(alpha)
    if not 0 < alpha_f < 1:
        raise TauOutOfRange(f"alpha must lie in (0, 1), got {alpha_f}")
    if not a < b:
        raise OutcomeOutOfRange(f"need a < b, got a={a}, b={b}")
    n = len(cal_outcomes)
    if n < 1:
        raise OutcomeOutOfRange("concentration interval needs calibration outcomes")
    for y in cal_outcomes:
        if not a <= y <= b:
            raise OutcomeOutOfRange(
                f"outcome {y} falls outside the declared range [{a}, {b}]"
            )
    total = cal_outcomes[0]
    for y in cal_outcomes[1:]:
        total = total + y
    mean = total / n
    half = (b - a) * math.sqrt(0.5 * (1.0 / n + 1.0 / m) * math.log(2.0 / float(alpha_f)))
    return PredictionInterval(
        lower=max(mean - half, a),
        upper=min(mean + half, b),
        levels=Levels.symmetric(alpha_f),
    )


def kfwer_pvalue_selection(
    cal: Sequence[tuple[float, float]],
    test_predictions: Sequence[float],
    c: float,
    k: int,
    alpha,
    variant: str = JIN_CANDES,
) -> frozenset[int]:
    """Selection by conformal p-values with control of the probability of
    more than k false selections: select j with p_j <= (k + 1) * alpha / m.

    cal holds (prediction, outcome) pairs for calibration units. The
    jin_candes p-value for test unit j counts calibration residuals
    outcome - prediction strictly below c - prediction_j; the jin_ren
    p-value counts calibration units with outcome <= c whose prediction
    strictly exceeds prediction_j. The second is never larger, so it
    selects a superset.
    """
    alpha = as_fraction(alpha)
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    m = len(test_predictions)
    if m == 0:
        return frozenset()
    n = len(cal)
    threshold = Fraction(k + 1) * alpha / m
    test_preds = np.asarray(test_predictions, dtype=float)
    if variant == JIN_CANDES:
        residuals = np.sort(np.array([y - mu for mu, y in cal], dtype=float))
        counts = np.searchsorted(residuals, c - test_preds, side="left")
    elif variant == JIN_REN:
        null_preds = np.sort(
            np.array([mu for mu, y in cal if y <= c], dtype=float)
        )
        counts = len(null_preds) - np.searchsorted(
            null_preds, test_preds, side="right"
        )
    else:
        raise ValueError(f"unknown p-value variant {variant!r}")
    return frozenset(
        j
        for j in range(m)
        if Fraction(int(counts[j]) + 1, n + 1) <= threshold
    )
