"""Batch prediction intervals when test covariates are shifted.

When the test features follow a different law than the calibration
features, exchangeability is restored by rejection sampling: keep each
calibration unit with probability (c / (1 - c)) * (1 - p(x)) / p(x), where
p(x) is the probability of belonging to the calibration arm given features
x and c is a lower bound on p. The accepted units are exchangeable with
the test points, so the ordinary batch interval applies conditional on the
realized masks. A subset-weighted extension of split conformal prediction
is included as the small-instance baseline it is meant to be compared
against.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .combinatorics import rank_simplex_size
from .core import (
    ONE,
    UNBOUNDED_RANGE,
    CalibrationScores,
    Levels,
    PredictionInterval,
    as_fraction,
    make_discrete_dist,
    order_statistics,
    quantile_lower,
    quantile_upper_tail,
)
from .engine import (
    ENUMERATION_CAP,
    EXACT,
    BatchScoreFn,
    RankOrderFn,
    RankQuantileMode,
    batch_pi,
)
from .errors import (
    EnumerationCapExceeded,
    PropensityBelowBound,
    ShapeMismatch,
    TauOutOfRange,
)


@dataclass(frozen=True)
class PropensityModel:
    """Calibration-membership probability p(x) with a uniform lower bound.

    evaluate(x) returns the probability that a unit with features x belongs
    to the calibration arm; lower_bound is the constant c in (0, 1) with
    p(x) >= c everywhere, supplied by the caller rather than estimated.
    """

    evaluate: Callable[[object], float]
    lower_bound: float

    def __post_init__(self) -> None:
        if not 0 < self.lower_bound < 1:
            raise TauOutOfRange(
                f"propensity lower bound must lie in (0, 1), got {self.lower_bound}"
            )


def acceptance_probability(model: PropensityModel, x) -> float:
    """(c / (1 - c)) * (1 - p(x)) / p(x), the Bernoulli acceptance rate that
    tilts the calibration covariate law onto the test covariate law.
    """
    p = model.evaluate(x)
    c = model.lower_bound
    if p < c:
        raise PropensityBelowBound(
            f"propensity {p} is below the declared lower bound {c}"
        )
    return min((c / (1.0 - c)) * ((1.0 - p) / p), 1.0)


def rejection_sample(
    features: Sequence, model: PropensityModel, seed: int
) -> tuple[bool, ...]:
    """Bernoulli acceptance mask over the calibration units, deterministic
    given the seed; accepted units are exchangeable with test points drawn
    from the tilted covariate law.
    """
    probs = [acceptance_probability(model, x) for x in features]
    if not probs:
        return ()
    rng = np.random.default_rng(seed)
    uniforms = rng.uniform(size=len(probs))
    return tuple(bool(u < p) for u, p in zip(uniforms, probs))


def batch_pi_covshift(
    cal: Sequence[tuple[object, float]],
    m: int,
    model: PropensityModel,
    h: BatchScoreFn,
    order: RankOrderFn,
    levels: Levels,
    mode: RankQuantileMode = EXACT,
    seed: int = 0,
    score_range: tuple[float, float] = UNBOUNDED_RANGE,
) -> PredictionInterval:
    """Batch interval under covariate shift: rejection sample the
    calibration pairs, then run the ordinary batch interval on the accepted
    scores. An empty accepted set is not an error; the interval degrades to
    the full score range pushed through h.
    """
    mask = rejection_sample([x for x, _ in cal], model, seed)
    accepted = [score for (_, score), keep in zip(cal, mask) if keep]
    scores = order_statistics(accepted, score_range=score_range)
    return batch_pi(scores, m, h, order, levels, mode)


def weighted_conformal_extended(
    cal: Sequence[tuple[object, float]],
    test_features: Sequence,
    model: PropensityModel,
    h: BatchScoreFn,
    levels: Levels,
    score_range: tuple[float, float] = UNBOUNDED_RANGE,
) -> PredictionInterval:
    """Subset-weighted extension of split conformal prediction under
    covariate shift, a small-instance baseline.

    Every size-m subset I of the n + m units carries weight proportional to
    the product of (1 - p(x_i)) / p(x_i) over i in I, in exact rational
    arithmetic. The lower endpoint is the upper beta-quantile of h applied
    to each subset's scores with test positions replaced by inf s; the
    upper endpoint is the (1 - gamma)-quantile with test positions replaced
    by sup s. With n comparable to m most subsets touch a sentinel, which
    is the non-usefulness this baseline demonstrates.
    """
    n = len(cal)
    m = len(test_features)
    if h.m != m:
        raise ShapeMismatch(
            f"batch score takes {h.m}-tuples but there are {m} test features"
        )
    total = rank_simplex_size(n, m)
    if total > ENUMERATION_CAP:
        raise EnumerationCapExceeded(
            f"weighted baseline would enumerate {total} subsets "
            f"(cap {ENUMERATION_CAP})"
        )
    c = model.lower_bound
    ratios = []
    for x in itertools.chain((x for x, _ in cal), test_features):
        p = model.evaluate(x)
        if p < c:
            raise PropensityBelowBound(
                f"propensity {p} is below the declared lower bound {c}"
            )
        p_frac = as_fraction(p)
        ratios.append((ONE - p_frac) / p_frac)
    lo, hi = score_range
    lower_scores = [s for _, s in cal] + [lo] * m
    upper_scores = [s for _, s in cal] + [hi] * m
    lower_pairs = []
    upper_pairs = []
    weight_total = Fraction(0)
    for subset in itertools.combinations(range(n + m), m):
        weight = Fraction(1)
        for i in subset:
            weight *= ratios[i]
        weight_total += weight
        lower_pairs.append(
            (h.evaluate(tuple(sorted(lower_scores[i] for i in subset))), weight)
        )
        upper_pairs.append(
            (h.evaluate(tuple(sorted(upper_scores[i] for i in subset))), weight)
        )
    if weight_total == 0:
        raise PropensityBelowBound(
            "all subset weights vanish; propensities are degenerate at 1"
        )
    lower_dist = make_discrete_dist(
        [(v, w / weight_total) for v, w in lower_pairs]
    )
    upper_dist = make_discrete_dist(
        [(v, w / weight_total) for v, w in upper_pairs]
    )
    lower = float(quantile_upper_tail(lower_dist, levels.beta))
    upper = float(quantile_lower(upper_dist, ONE - levels.gamma))
    return PredictionInterval(lower=lower, upper=upper, levels=levels)
