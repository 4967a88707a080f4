"""Batch prediction intervals for monotone functions of a test batch.

Given n calibration scores and a monotone batch score h of the m test
scores, the interval [B_L, B_U] with

    B_L = min{h(S_(r_1 - 1), ..., S_(r_m - 1)) : h~(r) >= q_L},
    B_U = max{h(S_(r_1), ..., S_(r_m)) : h~(r) <= q_U},

covers h of the test batch with probability at least 1 - alpha under
exchangeability, where r ranges over the rank simplex H, h~ is a
rank-ordering function, q_L is the upper beta-quantile and q_U the
(1 - gamma)-quantile of h~ under the uniform law on H, and S_(0), S_(n+1)
are the score-range sentinels. This module computes the rank quantiles
(exactly or by sampling), the endpoints (by dynamic programming for
compositional h and h~, by enumeration otherwise), and a full-enumeration
oracle for cross-checking.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from random import Random
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .combinatorics import (
    ADDITION_STEP,
    CompositionalRankStep,
    bisection_inverse,
    compositional_value_counts,
    rank_simplex_size,
    validate_step,
)
from .core import (
    NEG_INF,
    ONE,
    POS_INF,
    CalibrationScores,
    Levels,
    PredictionInterval,
    ceil_fraction,
    make_discrete_dist,
    quantile_lower,
    quantile_upper_tail,
)
from .errors import (
    EnumerationCapExceeded,
    HNotDefinedOnIntegers,
    NoFeasibleRank,
    QTooSmall,
    SampleCountTooSmall,
    ShapeMismatch,
    SplitTooSmall,
    StepContractViolated,
    ZetaOutOfRange,
)

RankVector = tuple[int, ...]

ENUMERATION_CAP = 200_000

SAMPLE_COUNT_MIN = 1000


def _add_scores(acc: float, score: float) -> float:
    return acc + score


def _fold_scores(
    step: Callable[[float, float], float], values: Sequence[float]
) -> float:
    acc = values[0]
    for v in values[1:]:
        acc = step(acc, v)
    return acc


@dataclass(frozen=True)
class BatchScoreFn:
    """A monotone function h of a non-decreasing m-tuple of scores.

    evaluate receives the sorted tuple, possibly containing the score-range
    sentinels, and must follow the sentinel conventions: h maps a tuple
    containing -inf in its first coordinate to -inf and one containing +inf
    in its last coordinate to +inf whenever the range is unbounded on that
    side. step, when present, declares h as a left fold: evaluate(v) equals
    finalize(((v_1 step v_2) step v_3) ...) with finalize defaulting to the
    identity; finalize must be strictly increasing. monotone declares
    coordinate-wise monotonicity (spot-checked by batch_pi).
    """

    m: int
    evaluate: Callable[[tuple[float, ...]], float]
    monotone: bool = True
    step: Optional[Callable[[float, float], float]] = None
    finalize: Optional[Callable[[float], float]] = None
    name: str = ""

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ShapeMismatch(f"batch size must be at least 1, got {self.m}")


@dataclass(frozen=True)
class RankOrderFn:
    """A rank-ordering function h~ on the rank simplex H.

    evaluate maps a non-decreasing m-tuple of ranks in 1..n+1 to a real (or
    extended real when built from a split whose sentinel is infinite). It
    must not depend on the calibration scores used in the same batch_pi
    call. step, when present, declares the compositional form
    evaluate(r) = finalize(fold of step over r) with integer fold values;
    finalize (identity by default) must be strictly increasing. max_rank,
    when set, is the largest rank evaluate is defined for.
    """

    m: int
    evaluate: Callable[[RankVector], float]
    step: Optional[CompositionalRankStep] = None
    finalize: Optional[Callable[[int], float]] = None
    max_rank: Optional[int] = None
    name: str = ""

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ShapeMismatch(f"batch size must be at least 1, got {self.m}")


@dataclass(frozen=True)
class ExactMode:
    """Exact rank quantiles via compositional counts or full enumeration."""

    cap: int = ENUMERATION_CAP


@dataclass(frozen=True)
class SampledMode:
    """Monte Carlo rank quantiles from count i.i.d. uniform rank draws."""

    count: int
    seed: int = 0


RankQuantileMode = Union[ExactMode, SampledMode]

EXACT = ExactMode()


def batch_sum(m: int) -> BatchScoreFn:
    """h(v) = v_1 + ... + v_m, accumulated left to right."""
    return BatchScoreFn(
        m=m,
        evaluate=lambda v: _fold_scores(_add_scores, v),
        monotone=True,
        step=_add_scores,
        finalize=None,
        name="sum",
    )


def batch_mean(m: int) -> BatchScoreFn:
    """h(v) = (v_1 + ... + v_m) / m, one division after a left-fold sum."""
    return BatchScoreFn(
        m=m,
        evaluate=lambda v: _fold_scores(_add_scores, v) / m,
        monotone=True,
        step=_add_scores,
        finalize=lambda total: total / m,
        name="mean",
    )


def batch_order_stat(m: int, zeta: int) -> BatchScoreFn:
    """h(v) = v_(zeta), the zeta-th smallest batch entry."""
    if not 1 <= zeta <= m:
        raise ZetaOutOfRange(f"zeta must lie in 1..{m}, got {zeta}")
    return BatchScoreFn(
        m=m,
        evaluate=lambda v: v[zeta - 1],
        monotone=True,
        step=None,
        finalize=None,
        name=f"orderstat{zeta}",
    )


def rank_order_from_h(h: BatchScoreFn) -> RankOrderFn:
    """h~(r) = h(r_1, ..., r_m), treating the ranks themselves as scores.

    When h declares an addition fold the rank fold inherits the fast exact
    counting path; any other declared fold is wrapped as an integer step
    with a bisection inverse.
    """
    probe_tuples = [tuple(range(1, h.m + 1)), (1,) * h.m]
    for probe in probe_tuples:
        try:
            value = h.evaluate(probe)
        except Exception as exc:
            raise HNotDefinedOnIntegers(
                f"batch score is not evaluable on integer tuple {probe}"
            ) from exc
        if not isinstance(value, (int, float)) or math.isnan(value):
            raise HNotDefinedOnIntegers(
                f"batch score returned {value!r} on integer tuple {probe}"
            )
    step: Optional[CompositionalRankStep] = None
    if h.step is _add_scores:
        step = ADDITION_STEP
    elif h.step is not None:
        gamma = h.step
        step = CompositionalRankStep(
            gamma_tilde=gamma, inverse=bisection_inverse(gamma), is_addition=False
        )
    return RankOrderFn(
        m=h.m,
        evaluate=h.evaluate,
        step=step,
        finalize=h.finalize,
        max_rank=None,
        name=f"rankorder({h.name})" if h.name else "rankorder",
    )


def rank_order_from_split(
    h: BatchScoreFn, split_scores: CalibrationScores
) -> RankOrderFn:
    """h~(r) = h(T_(r_1), ..., T_(r_m)) for the order statistics T of an
    auxiliary split sample, disjoint from the calibration scores used in the
    same batch_pi call (caller contract).

    The split must have at least n elements when used with calibration size
    n; with exactly n elements rank n+1 maps to the split's upper sentinel.
    """
    if split_scores.n == 0:
        raise SplitTooSmall("split sample is empty")

    def evaluate(ranks: RankVector) -> float:
        return h.evaluate(tuple(split_scores.order_stat(j) for j in ranks))

    return RankOrderFn(
        m=h.m,
        evaluate=evaluate,
        step=None,
        finalize=None,
        max_rank=split_scores.n + 1,
        name=f"splitorder({h.name})" if h.name else "splitorder",
    )


def _enumerate_ranks(n: int, m: int):
    return itertools.combinations_with_replacement(range(1, n + 2), m)


def _check_rank_domain(order: RankOrderFn, n: int) -> None:
    if order.max_rank is not None and n + 1 > order.max_rank:
        raise SplitTooSmall(
            f"rank-order function covers ranks up to {order.max_rank}, "
            f"but calibration size {n} needs rank {n + 1}"
        )


def rank_quantiles(
    order: RankOrderFn,
    n: int,
    m: int,
    levels: Levels,
    mode: RankQuantileMode = EXACT,
) -> tuple[float, float]:
    """(q_L, q_U): the upper beta-quantile and lower (1 - gamma)-quantile of
    h~ under the uniform law on the rank simplex.

    Exact mode uses the compositional counts when the order function
    declares a step, and full enumeration under the cap otherwise. Sampled
    mode draws count i.i.d. uniform rank vectors (m uniforms on 1..n+1,
    sorted) and returns the matching empirical sample quantiles.
    """
    if order.m != m:
        raise ShapeMismatch(f"rank-order function has m={order.m}, call has m={m}")
    _check_rank_domain(order, n)
    if isinstance(mode, SampledMode):
        if mode.count < SAMPLE_COUNT_MIN:
            raise SampleCountTooSmall(
                f"sampled mode needs at least {SAMPLE_COUNT_MIN} draws, "
                f"got {mode.count}"
            )
        rng = np.random.default_rng(mode.seed)
        draws = rng.integers(1, n + 2, size=(mode.count, m))
        draws.sort(axis=1)
        if order.step is not None and order.step.is_addition:
            folds = draws.sum(axis=1)
            if order.finalize is None:
                values = folds.astype(float)
            else:
                values = np.array([order.finalize(int(k)) for k in folds])
        else:
            values = np.fromiter(
                (order.evaluate(tuple(row)) for row in draws.tolist()),
                dtype=float,
                count=mode.count,
            )
        values.sort()
        count = mode.count
        upper_index = ceil_fraction((ONE - levels.gamma) * count)
        lower_index = count - ceil_fraction((ONE - levels.beta) * count) + 1
        return float(values[lower_index - 1]), float(values[upper_index - 1])

    total = rank_simplex_size(n, m)
    if order.step is not None:
        counts = compositional_value_counts(order.step, m, n + 1)
        finalize = order.finalize
        pairs = []
        for fold_value, count in sorted(counts.items()):
            value = float(fold_value) if finalize is None else finalize(fold_value)
            pairs.append((float(value), Fraction(count, total)))
        dist = make_discrete_dist(pairs)
    else:
        if total > mode.cap:
            raise EnumerationCapExceeded(
                f"exact mode would enumerate {total} rank vectors "
                f"(cap {mode.cap}) and no compositional step is declared"
            )
        mass = Fraction(1, total)
        pairs = [
            (float(order.evaluate(r)), mass) for r in _enumerate_ranks(n, m)
        ]
        dist = make_discrete_dist(pairs)
    q_lower = quantile_upper_tail(dist, levels.beta)
    q_upper = quantile_lower(dist, ONE - levels.gamma)
    return float(q_lower), float(q_upper)


def _largest_fold_leq(
    finalize: Optional[Callable[[int], float]], q: float, cap: int
) -> Optional[int]:
    """Largest integer k in [0, cap] with finalize(k) <= q, or None."""
    if finalize is None:
        if q == POS_INF:
            return cap
        budget = math.floor(q)
        return None if budget < 0 else min(budget, cap)
    if finalize(0) > q:
        return None
    if finalize(cap) <= q:
        return cap
    lo, hi = 0, cap
    while lo < hi - 1:
        mid = (lo + hi) // 2
        if finalize(mid) <= q:
            lo = mid
        else:
            hi = mid
    return lo


def _smallest_fold_geq(
    finalize: Optional[Callable[[int], float]], q: float, cap: int
) -> Optional[int]:
    """Smallest integer k in [0, cap] with finalize(k) >= q, or None."""
    if finalize is None:
        if q == NEG_INF:
            return 0
        if q == POS_INF:
            return None
        target = math.ceil(q)
        if target <= 0:
            return 0
        return target if target <= cap else None
    if finalize(0) >= q:
        return 0
    if finalize(cap) < q:
        return None
    lo, hi = 0, cap
    while lo < hi - 1:
        mid = (lo + hi) // 2
        if finalize(mid) >= q:
            hi = mid
        else:
            lo = mid
    return hi


def _dp_max_sum_budget(values: Sequence[float], m: int, budget: int) -> float:
    """max sum(values[r_i - 1]) over multisets of m ranks r in 1..len(values)
    with sum(r) <= budget; NEG_INF when infeasible. Values must be finite
    and sorted ascending; the fold accumulates in ascending rank order.
    """
    n = len(values)
    if n == 0 or budget < m:
        return NEG_INF
    cap = min(budget, m * n)
    table = np.full((m + 1, cap + 1), -np.inf)
    table[0, 0] = 0.0
    for rank in range(1, n + 1):
        v = values[rank - 1]
        if rank > cap:
            break
        for length in range(1, m + 1):
            cand = table[length - 1, : cap - rank + 1] + v
            np.maximum(table[length, rank:], cand, out=table[length, rank:])
    best = table[m].max()
    return float(best) if best > -np.inf else NEG_INF


def _dp_min_sum_floor(
    pairs: Sequence[tuple[int, float]], m: int, floor_budget: int
) -> float:
    """min sum of chosen values over multisets of m (cost, value) pairs with
    sum(cost) >= floor_budget; POS_INF when infeasible. Pairs must be sorted
    by cost ascending with finite values; costs are nonnegative integers.
    State k = min(accumulated cost, floor) merges everything past the floor.
    """
    if not pairs:
        return POS_INF
    floor = max(floor_budget, 0)
    table = np.full((m + 1, floor + 1), np.inf)
    table[0, 0] = 0.0
    for cost, v in pairs:
        for length in range(1, m + 1):
            prev = table[length - 1]
            shifted = np.full(floor + 1, np.inf)
            if cost <= floor:
                shifted[cost:] = prev[: floor + 1 - cost]
                if cost >= 1:
                    tail = prev[floor + 1 - cost :]
                    shifted[floor] = min(shifted[floor], tail.min())
            else:
                shifted[floor] = prev.min()
            np.minimum(table[length], shifted + v, out=table[length])
    best = table[m, floor]
    return float(best) if best < np.inf else POS_INF


def _finalize_h(h: BatchScoreFn, fold_value: float) -> float:
    return fold_value if h.finalize is None else h.finalize(fold_value)


def _compositional_endpoint(
    scores: CalibrationScores,
    h: BatchScoreFn,
    order: RankOrderFn,
    q: float,
    upper: bool,
) -> float:
    """Dict-based forward DP over exact fold states for arbitrary
    compositional steps; exponential-free but intended for moderate sizes.
    Tracks, per tuple length and exact h~ fold value, the extreme h fold.
    """
    n = scores.n
    m = h.m
    step = order.step
    assert step is not None and h.step is not None
    if not step.is_addition:
        validate_step(step, n + 1)
    better = max if upper else min
    layers: list[dict[int, float]] = [dict() for _ in range(m + 1)]
    positions = range(1, n + 2) if upper else range(0, n + 1)
    for a in positions:
        s = scores.order_stat(a)
        g_rank = a if upper else a + 1
        for length in range(1, m + 1):
            source = layers[length - 1].items() if length > 1 else [(0, 0.0)]
            target = layers[length]
            for k_prev, h_prev in source:
                k_new = step.gamma_tilde(k_prev, g_rank)
                h_new = s if length == 1 else h.step(h_prev, s)
                cur = target.get(k_new)
                if cur is None or better(h_new, cur) != cur:
                    target[k_new] = h_new
    finalize = order.finalize
    candidates = []
    for k, h_fold in layers[m].items():
        value = float(k) if finalize is None else finalize(k)
        if (value <= q) if upper else (value >= q):
            candidates.append(h_fold)
    if not candidates:
        raise NoFeasibleRank(
            f"no rank vector satisfies the h~ {'<=' if upper else '>='} {q} constraint"
        )
    return _finalize_h(h, better(candidates))


def _enumeration_endpoint(
    scores: CalibrationScores,
    h: BatchScoreFn,
    order: RankOrderFn,
    q: float,
    upper: bool,
    cap: int = ENUMERATION_CAP,
) -> float:
    n = scores.n
    m = h.m
    total = rank_simplex_size(n, m)
    if total > cap:
        raise EnumerationCapExceeded(
            f"endpoint enumeration needs {total} rank vectors (cap {cap}); "
            "declare compositional steps to use the DP instead"
        )
    ext = scores.extended()
    best = None
    shift = 0 if upper else 1
    for r in _enumerate_ranks(n, m):
        value = order.evaluate(r)
        if (value <= q) if upper else (value >= q):
            cand = h.evaluate(tuple(ext[j - shift] for j in r))
            if best is None:
                best = cand
            else:
                best = max(best, cand) if upper else min(best, cand)
    if best is None:
        raise NoFeasibleRank(
            f"no rank vector satisfies the h~ {'<=' if upper else '>='} {q} constraint"
        )
    return best


def endpoint_upper(
    scores: CalibrationScores, h: BatchScoreFn, order: RankOrderFn, q_U: float
) -> float:
    """B_U = max{h(S_(r_1), ..., S_(r_m)) : h~(r) <= q_U}.

    Dispatches to the sum DP when both h and h~ declare addition folds, to
    the generic compositional DP when both declare folds, and to enumeration
    under the cap otherwise. The sentinel rank n+1 contributes sup s; with
    an unbounded range the result is +inf as soon as a rank vector touching
    n+1 is feasible.
    """
    if order.m != h.m:
        raise ShapeMismatch(f"order has m={order.m}, batch score has m={h.m}")
    _check_rank_domain(order, scores.n)
    n = scores.n
    m = h.m
    if order.step is None or h.step is None:
        return _enumeration_endpoint(scores, h, order, q_U, upper=True)
    if not (order.step.is_addition and h.step is _add_scores):
        return _compositional_endpoint(scores, h, order, q_U, upper=True)
    budget = _largest_fold_leq(order.finalize, q_U, m * (n + 1))
    if budget is None or budget < m:
        raise NoFeasibleRank(f"no rank vector satisfies h~ <= {q_U}")
    sup = scores.score_range[1]
    if sup == POS_INF:
        if m + n <= budget:
            return POS_INF
        fold = _dp_max_sum_budget(scores.sorted_scores, m, budget)
    else:
        fold = _dp_max_sum_budget(scores.sorted_scores + (sup,), m, budget)
    if fold == NEG_INF:
        raise NoFeasibleRank(f"no rank vector satisfies h~ <= {q_U}")
    return _finalize_h(h, fold)


def endpoint_lower(
    scores: CalibrationScores, h: BatchScoreFn, order: RankOrderFn, q_L: float
) -> float:
    """B_L = min{h(S_(r_1 - 1), ..., S_(r_m - 1)) : h~(r) >= q_L}.

    Mirror of endpoint_upper with shifted score indices: position r - 1 runs
    over 0..n, so the lower sentinel S_(0) = inf s is reachable and the
    upper sentinel never is. With an unbounded-below range the result is
    -inf as soon as a rank vector with r_1 = 1 is feasible.
    """
    if order.m != h.m:
        raise ShapeMismatch(f"order has m={order.m}, batch score has m={h.m}")
    _check_rank_domain(order, scores.n)
    n = scores.n
    m = h.m
    if order.step is None or h.step is None:
        return _enumeration_endpoint(scores, h, order, q_L, upper=False)
    if not (order.step.is_addition and h.step is _add_scores):
        return _compositional_endpoint(scores, h, order, q_L, upper=False)
    floor_k = _smallest_fold_geq(order.finalize, q_L, m * (n + 1))
    if floor_k is None:
        raise NoFeasibleRank(f"no rank vector satisfies h~ >= {q_L}")
    floor_budget = floor_k - m
    lo = scores.score_range[0]
    if lo == NEG_INF:
        if (m - 1) * n >= floor_budget:
            return NEG_INF
        pairs = [(rho, scores.sorted_scores[rho - 1]) for rho in range(1, n + 1)]
    else:
        pairs = [(0, lo)] + [
            (rho, scores.sorted_scores[rho - 1]) for rho in range(1, n + 1)
        ]
    fold = _dp_min_sum_floor(pairs, m, floor_budget)
    if fold == POS_INF:
        raise NoFeasibleRank(f"no rank vector satisfies h~ >= {q_L}")
    return _finalize_h(h, fold)


def _spot_check_monotone(scores: CalibrationScores, h: BatchScoreFn) -> None:
    if not h.monotone or scores.n < 1:
        return
    low = h.evaluate((scores.sorted_scores[0],) * h.m)
    high = h.evaluate((scores.sorted_scores[-1],) * h.m)
    if low > high:
        raise ValueError(
            "batch score is declared monotone but decreases from the all-min "
            "to the all-max calibration tuple"
        )


def batch_pi(
    scores: CalibrationScores,
    m: int,
    h: BatchScoreFn,
    order: RankOrderFn,
    levels: Levels,
    mode: RankQuantileMode = EXACT,
) -> PredictionInterval:
    """The two-sided batch prediction interval [B_L, B_U] for h of the m
    test scores at miscoverage alpha = beta + gamma.

    With no calibration data every batch is ranked at the sentinel, so the
    interval is the full score range pushed through h.
    """
    if m < 1:
        raise ShapeMismatch(f"batch size must be at least 1, got {m}")
    if h.m != m or order.m != m:
        raise ShapeMismatch(
            f"batch size mismatch: call has m={m}, h has m={h.m}, "
            f"order has m={order.m}"
        )
    if scores.n == 0:
        return oracle_batch_pi(scores, m, h, order, levels)
    _spot_check_monotone(scores, h)
    q_L, q_U = rank_quantiles(order, scores.n, m, levels, mode)
    lower = endpoint_lower(scores, h, order, q_L)
    upper = endpoint_upper(scores, h, order, q_U)
    return PredictionInterval(lower=lower, upper=upper, levels=levels)


def batch_pi_one_sided(
    scores: CalibrationScores,
    m: int,
    h: BatchScoreFn,
    order: RankOrderFn,
    alpha,
    mode: RankQuantileMode = EXACT,
) -> float:
    """The one-sided upper bound B with P(h(test batch) <= B) >= 1 - alpha;
    equal to the upper endpoint of batch_pi at levels (alpha, 0, alpha).
    """
    interval = batch_pi(scores, m, h, order, Levels.one_sided_upper(alpha), mode)
    return interval.upper


def dp_max_sum(scores: CalibrationScores, m: int, q) -> float:
    """max{S_(r_1) + ... + S_(r_m) : sum(r) <= q} over ranks 1..n only;
    sentinel ranks are composed by the endpoint functions separately.
    """
    if q < m:
        raise QTooSmall(f"rank-sum budget {q} cannot fit {m} ranks of at least 1")
    if scores.n == 0:
        raise NoFeasibleRank("no calibration scores to rank")
    return _dp_max_sum_budget(scores.sorted_scores, m, math.floor(q))


def _spot_check_score_step(
    h_step: Callable[[float, float], float], scores: CalibrationScores
) -> None:
    rng = Random(4813)
    probes = list(scores.sorted_scores[:8]) or [0.0, 1.0]
    for s in probes:
        for _ in range(8):
            a = rng.uniform(-10.0, 10.0)
            b = a + rng.uniform(0.5, 3.0)
            if not h_step(a, s) < h_step(b, s):
                raise StepContractViolated(
                    f"score step is not strictly increasing in the accumulator "
                    f"at score {s}: step({a}) >= step({b})"
                )


def dp_max_compositional(
    scores: CalibrationScores,
    m: int,
    q,
    h_step: Callable[[float, float], float],
    order_step: CompositionalRankStep,
) -> float:
    """max of the h fold over rank multisets from 1..n with h~ fold <= q,
    for arbitrary strictly increasing steps; equals dp_max_sum when both
    steps are addition.
    """
    if scores.n == 0:
        raise NoFeasibleRank("no calibration scores to rank")
    if order_step.is_addition and h_step is _add_scores:
        return dp_max_sum(scores, m, q)
    validate_step(order_step, scores.n)
    _spot_check_score_step(h_step, scores)
    layers: list[dict[int, float]] = [dict() for _ in range(m + 1)]
    for a in range(1, scores.n + 1):
        s = scores.sorted_scores[a - 1]
        for length in range(1, m + 1):
            source = layers[length - 1].items() if length > 1 else [(0, 0.0)]
            target = layers[length]
            for k_prev, h_prev in source:
                k_new = order_step.gamma_tilde(k_prev, a)
                h_new = s if length == 1 else h_step(h_prev, s)
                cur = target.get(k_new)
                if cur is None or h_new > cur:
                    target[k_new] = h_new
    candidates = [v for k, v in layers[m].items() if k <= q]
    if not candidates:
        raise QTooSmall(f"no rank multiset reaches an h~ fold at or below {q}")
    return max(candidates)


def oracle_batch_pi(
    scores: CalibrationScores,
    m: int,
    h: BatchScoreFn,
    order: RankOrderFn,
    levels: Levels,
) -> PredictionInterval:
    """Ground-truth interval by full enumeration of the rank simplex; the
    reference all other computation paths are tested against.
    """
    if h.m != m or order.m != m:
        raise ShapeMismatch(
            f"batch size mismatch: call has m={m}, h has m={h.m}, "
            f"order has m={order.m}"
        )
    n = scores.n
    _check_rank_domain(order, n)
    total = rank_simplex_size(n, m)
    if total > ENUMERATION_CAP:
        raise EnumerationCapExceeded(
            f"oracle enumeration needs {total} rank vectors (cap {ENUMERATION_CAP})"
        )
    mass = Fraction(1, total)
    values = [(float(order.evaluate(r)), mass) for r in _enumerate_ranks(n, m)]
    dist = make_discrete_dist(values)
    q_L = float(quantile_upper_tail(dist, levels.beta))
    q_U = float(quantile_lower(dist, ONE - levels.gamma))
    ext = scores.extended()
    lower = None
    upper = None
    for r in _enumerate_ranks(n, m):
        value = order.evaluate(r)
        if value >= q_L:
            cand = h.evaluate(tuple(ext[j - 1] for j in r))
            lower = cand if lower is None else min(lower, cand)
        if value <= q_U:
            cand = h.evaluate(tuple(ext[j] for j in r))
            upper = cand if upper is None else max(upper, cand)
    if lower is None or upper is None:
        raise NoFeasibleRank("quantile constraints exclude every rank vector")
    return PredictionInterval(lower=lower, upper=upper, levels=levels)
