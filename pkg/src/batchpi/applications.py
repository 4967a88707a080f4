"""Applications of batch predictive inference.

Three constructions built on the quantile machinery: simultaneous
prediction sets with a PAC-style guarantee on the fraction of covered test
points, selection of promising test units with control of the number of
false claims, and prediction intervals for counterfactual outcomes of
treated units using only untreated observations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

from .core import (
    ONE,
    UNBOUNDED_RANGE,
    CalibrationScores,
    Levels,
    PredictionInterval,
    as_fraction,
    ceil_fraction,
    order_statistics,
    quantile_lower,
)
from .combinatorics import quantile_rank_pmf
from .covshift import PropensityModel, rejection_sample
from .engine import batch_mean, batch_pi, batch_sum, rank_order_from_h
from .errors import (
    EtaOutOfRange,
    NegativePrediction,
    NoControlUnits,
    NoTreatedUnits,
    TauOutOfRange,
)
from .quantiles import (
    MultiQuantileBounds,
    QuantileTarget,
    multi_quantile_bounds,
    quantile_interval,
)


@dataclass(frozen=True)
class PacRank:
    """The calibration rank whose order statistic thresholds a family of
    per-point prediction sets, so that with probability at least 1 - alpha
    a fraction at least 1 - delta of the test batch is covered.
    """

    r: int
    delta: Fraction
    alpha: Fraction
    m_delta: int

    def __post_init__(self) -> None:
        if self.r < 1:
            raise ValueError(f"rank must be at least 1, got {self.r}")


def pac_rank(n: int, m: int, delta, alpha) -> PacRank:
    """Rank r such that the sets {y : s(x_j, y) <= S_(r)} cover at least
    ceil((1 - delta) * m) of the m test points with probability >= 1 - alpha.

    The count of covered points is at least m_delta = ceil((1 - delta) m)
    exactly when the m_delta-th smallest test score is at most S_(r), so r
    is the (1 - alpha)-quantile of that order statistic's rank pmf.
    """
    delta = as_fraction(delta)
    alpha = as_fraction(alpha)
    if not 0 < delta < 1:
        raise TauOutOfRange(f"delta must lie in (0, 1), got {delta}")
    if not 0 < alpha < 1:
        raise TauOutOfRange(f"alpha must lie in (0, 1), got {alpha}")
    m_delta = ceil_fraction((ONE - delta) * m)
    pmf = quantile_rank_pmf(n, m, m_delta)
    rank = int(quantile_lower(pmf, ONE - alpha))
    return PacRank(r=rank, delta=delta, alpha=alpha, m_delta=m_delta)


@dataclass(frozen=True)
class SelectionResult:
    """A selection threshold with its error budget.

    selected holds the indices of predictions strictly above the threshold
    once select() has been applied; selection_threshold returns it empty.
    The guarantee: among test units whose true outcome is at most the
    cutoff, at most eta are selected, with probability at least 1 - alpha.
    """

    threshold: float
    selected: frozenset[int]
    eta: int
    alpha: Fraction


def selection_threshold(
    cal_scores_of_nulls: CalibrationScores, m: int, eta: int, alpha
) -> SelectionResult:
    """Threshold T = S_(q) with q the (1 - alpha)-quantile of the rank pmf
    at zeta = m - eta.

    Calibration scores must be built as s(x, y) = mu(x) * 1{y <= cutoff}
    over all calibration units with a nonnegative model mu (caller
    contract). Selecting predictions strictly above T then yields more than
    eta false claims only if the (m - eta)-th smallest test null score
    exceeds T, an event of probability at most alpha.
    """
    alpha = as_fraction(alpha)
    if not 0 < alpha < 1:
        raise TauOutOfRange(f"alpha must lie in (0, 1), got {alpha}")
    if not 0 <= eta <= m - 1:
        raise EtaOutOfRange(f"eta must lie in 0..{m - 1}, got {eta}")
    pmf = quantile_rank_pmf(cal_scores_of_nulls.n, m, m - eta)
    q = int(quantile_lower(pmf, ONE - alpha))
    return SelectionResult(
        threshold=cal_scores_of_nulls.order_stat(q),
        selected=frozenset(),
        eta=eta,
        alpha=alpha,
    )


def select(predictions: Sequence[float], threshold) -> frozenset[int]:
    """{j : predictions[j] > threshold}, strict, with 0-based indices.
    Accepts a bare threshold or a SelectionResult.
    """
    if isinstance(threshold, SelectionResult):
        threshold = threshold.threshold
    for j, value in enumerate(predictions):
        if value < 0:
            raise NegativePrediction(
                f"prediction {j} is negative ({value}); the selection "
                "guarantee needs nonnegative model outputs"
            )
    return frozenset(j for j, value in enumerate(predictions) if value > threshold)


def tanh_bounded_outcomes(values: Sequence[float]) -> list[float]:
    """Map unbounded outcomes into (-1, 1) by tanh, preserving order, so
    thresholded selection scores stay bounded. Apply the same transform to
    the cutoff.
    """
    return [math.tanh(v) for v in values]


@dataclass(frozen=True)
class MeanTarget:
    """One-sided upper bound on the mean of the counterfactual outcomes."""


@dataclass(frozen=True)
class MedianTarget:
    """Two-sided interval for the batch median, split beta = gamma = alpha/2."""


@dataclass(frozen=True)
class QuantilesTarget:
    """Simultaneous bounds on the t_list-th smallest counterfactual outcomes."""

    t_list: tuple[int, ...]


MEAN = MeanTarget()
MEDIAN = MedianTarget()

CounterfactualTarget = Union[MeanTarget, MedianTarget, QuantilesTarget]


def counterfactual_interval(
    observed: Sequence[tuple[object, int, float]],
    propensity: PropensityModel,
    target: CounterfactualTarget,
    alpha,
    seed: int,
    outcome_range: tuple[float, float] = UNBOUNDED_RANGE,
) -> Union[PredictionInterval, MultiQuantileBounds]:
    """Inference on the untreated-potential outcomes of the treated units.

    observed holds (features, treatment, outcome) triples; untreated units
    (treatment 0) form the calibration set with their outcomes as scores,
    and the treated units are the test batch whose counterfactual outcomes
    are the inference target. propensity.evaluate(x) must return the
    probability of being untreated given x, with lower_bound a uniform
    lower bound on it; rejection sampling with that model makes the
    accepted untreated outcomes exchangeable with the treated units'
    counterfactuals. MEAN gives a one-sided upper bound on the treated
    batch's mean outcome (levels beta = 0, gamma = alpha); MEDIAN a
    two-sided interval for the batch median; QuantilesTarget simultaneous
    bounds at the requested ranks.
    """
    alpha = as_fraction(alpha)
    controls = [(x, y) for x, a, y in observed if a == 0]
    treated = [x for x, a, _ in observed if a == 1]
    m = len(treated)
    if m == 0:
        raise NoTreatedUnits("no treated units to infer counterfactuals for")
    if not controls:
        raise NoControlUnits("no untreated units to calibrate on")
    mask = rejection_sample([x for x, _ in controls], propensity, seed)
    accepted = [y for (_, y), keep in zip(controls, mask) if keep]
    scores = order_statistics(accepted, score_range=outcome_range)
    if isinstance(target, MeanTarget):
        h = batch_mean(m)
        order = rank_order_from_h(batch_sum(m))
        return batch_pi(scores, m, h, order, Levels.one_sided_upper(alpha))
    if isinstance(target, MedianTarget):
        half = alpha / 2
        return quantile_interval(
            scores,
            m,
            QuantileTarget.for_batch(Fraction(1, 2), m),
            Levels(beta=half, gamma=half),
        )
    if isinstance(target, QuantilesTarget):
        return multi_quantile_bounds(scores, m, target.t_list, alpha)
    raise TypeError(f"unknown counterfactual target {target!r}")
