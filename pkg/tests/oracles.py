"""Independent brute-force reference implementations used by the tests.

Everything here enumerates rank tuples directly with itertools and exact
rational arithmetic. Nothing imports package internals, so agreement
between these oracles and the library is a meaningful check.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from fractions import Fraction
from typing import Callable, Sequence


def rank_tuples(n: int, m: int):
    """All non-decreasing m-tuples over ranks 1..n+1."""
    return itertools.combinations_with_replacement(range(1, n + 2), m)


def simplex_size(n: int, m: int) -> int:
    return math.comb(n + m, m)


def upper_quantile(pairs: Sequence[tuple[float, Fraction]], tau: Fraction) -> float:
    """Smallest value whose cumulative mass reaches tau (tau in (0, 1])."""
    total = Fraction(0)
    for value, mass in sorted(pairs, key=lambda p: p[0]):
        total += mass
        if total >= tau:
            return value
    raise AssertionError("masses did not reach tau")


def lower_tail_quantile(pairs: Sequence[tuple[float, Fraction]], tau: Fraction) -> float:
    """Largest value v with P(X >= v) >= 1 - tau (tau in [0, 1))."""
    total = Fraction(0)
    for value, mass in sorted(pairs, key=lambda p: p[0], reverse=True):
        total += mass
        if total >= 1 - tau:
            return value
    raise AssertionError("masses did not reach 1 - tau")


def oracle_interval(
    sorted_scores: Sequence[float],
    lo: float,
    hi: float,
    m: int,
    h_eval: Callable[[tuple[float, ...]], float],
    order_eval: Callable[[tuple[int, ...]], float],
    beta: Fraction,
    gamma: Fraction,
) -> tuple[float, float]:
    """Batch interval straight from the definition: push the rank-ordering
    function forward over the whole rank simplex, take its exact quantiles,
    and scan the simplex again for the extreme h values.
    """
    n = len(sorted_scores)
    ext = [lo] + list(sorted_scores) + [hi]

    def stat(rank: int) -> float:
        return ext[rank]

    tuples = list(rank_tuples(n, m))
    mass = Fraction(1, len(tuples))
    pushforward = [(order_eval(r), mass) for r in tuples]
    q_l = lower_tail_quantile(pushforward, beta)
    q_u = upper_quantile(pushforward, 1 - gamma)

    lower_candidates = [
        h_eval(tuple(stat(rj - 1) for rj in r))
        for r in tuples
        if order_eval(r) >= q_l
    ]
    upper_candidates = [
        h_eval(tuple(stat(rj) for rj in r))
        for r in tuples
        if order_eval(r) <= q_u
    ]
    return min(lower_candidates), max(upper_candidates)


def oracle_rank_pmf(n: int, m: int, zeta: int) -> dict[int, Fraction]:
    counts: Counter = Counter()
    for r in rank_tuples(n, m):
        counts[r[zeta - 1]] += 1
    total = simplex_size(n, m)
    return {k: Fraction(v, total) for k, v in sorted(counts.items())}


def oracle_sum_counts(m: int, max_rank: int) -> dict[int, int]:
    counts: Counter = Counter()
    for r in itertools.combinations_with_replacement(range(1, max_rank + 1), m):
        counts[sum(r)] += 1
    return dict(counts)


def oracle_compositional_counts(
    step: Callable[[int, int], int], m: int, max_rank: int
) -> dict[int, int]:
    counts: Counter = Counter()
    for r in itertools.combinations_with_replacement(range(1, max_rank + 1), m):
        acc = 0
        for rank in r:
            acc = step(acc, rank)
        counts[acc] += 1
    return dict(counts)


def oracle_level_set_count(
    n: int, m: int, t_list: Sequence[int], rho_list: Sequence[int]
) -> int:
    hits = 0
    for r in rank_tuples(n, m):
        if all(r[t - 1] == rho for t, rho in zip(t_list, rho_list)):
            hits += 1
    return hits


def oracle_box_count(
    n: int,
    m: int,
    t_list: Sequence[int],
    w_list: Sequence[int],
    q_list: Sequence[int],
) -> int:
    hits = 0
    for r in rank_tuples(n, m):
        if all(
            w <= r[t - 1] <= q for t, w, q in zip(t_list, w_list, q_list)
        ):
            hits += 1
    return hits


def oracle_epsilon(n: int, m: int, zeta: int) -> Fraction:
    return max(oracle_rank_pmf(n, m, zeta).values())


def oracle_pac_rank(n: int, m: int, delta: Fraction, alpha: Fraction) -> int:
    m_delta = math.ceil((1 - delta) * m)
    pmf = oracle_rank_pmf(n, m, m_delta)
    pairs = [(float(k), v) for k, v in pmf.items()]
    return int(upper_quantile(pairs, 1 - alpha))


def oracle_weighted_interval(
    cal: Sequence[tuple[Fraction, float]],
    m: int,
    lo: float,
    hi: float,
    test_ratios: Sequence[Fraction],
    h_eval: Callable[[tuple[float, ...]], float],
    beta: Fraction,
    gamma: Fraction,
) -> tuple[float, float]:
    """Weighted subset-conformal interval from the definition: every size-m
    subset of the n + m units weighted by the product of its ratios.
    """
    ratios = [w for w, _ in cal] + list(test_ratios)
    lower_scores = [s for _, s in cal] + [lo] * m
    upper_scores = [s for _, s in cal] + [hi] * m
    lower_pairs = []
    upper_pairs = []
    total = Fraction(0)
    for subset in itertools.combinations(range(len(ratios)), m):
        weight = Fraction(1)
        for i in subset:
            weight *= ratios[i]
        total += weight
        lower_pairs.append(
            (h_eval(tuple(sorted(lower_scores[i] for i in subset))), weight)
        )
        upper_pairs.append(
            (h_eval(tuple(sorted(upper_scores[i] for i in subset))), weight)
        )
    lower_pairs = [(v, w / total) for v, w in lower_pairs]
    upper_pairs = [(v, w / total) for v, w in upper_pairs]
    return (
        lower_tail_quantile(lower_pairs, beta),
        upper_quantile(upper_pairs, 1 - gamma),
    )
