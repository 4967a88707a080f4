"""Exact counting over the rank simplex.

The rank simplex H for calibration size n and batch size m is the set of
non-decreasing m-tuples of ranks in {1, ..., n+1}; |H| = C(n+m, m). This
module counts H and its slices exactly with arbitrary-precision integers:
multiset coefficients, the pmf of a single test order-statistic rank,
restricted sum-of-ranks counts, generic compositional value counts, and the
level-set and box counts used for simultaneous quantile bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from random import Random
from typing import Callable, Optional, Sequence

from .core import DiscreteDist, make_discrete_dist
from .errors import (
    BoxInvalid,
    ShapeMismatch,
    StepContractViolated,
    ZetaOutOfRange,
)


def multiset_coeff(n: int, r: int) -> int:
    """The number of size-r multisets from n items: C(n+r-1, r).

    Defined for n, r >= 0 with multiset_coeff(0, 0) = 1 and
    multiset_coeff(0, r) = 0 for r > 0.
    """
    if n < 0 or r < 0:
        raise ValueError(f"multiset_coeff needs nonnegative arguments, got ({n}, {r})")
    if r == 0:
        return 1
    if n == 0:
        return 0
    return math.comb(n + r - 1, r)


def rank_simplex_size(n: int, m: int) -> int:
    """|H| = C(n+m, m) for calibration size n and batch size m."""
    return multiset_coeff(n + 1, m)


def quantile_rank_pmf(n: int, m: int, zeta: int) -> DiscreteDist:
    """Exact pmf of the rank of the zeta-th test order statistic.

    Under exchangeability the rank r_(zeta) of the zeta-th smallest test score
    among the n calibration scores takes values k in {1, ..., n+1} with

        p(k) = C(k + zeta - 2, zeta - 1) * C(n + m - k - zeta + 1, m - zeta)
               / C(n + m, m),

    the law of an order statistic sampled without replacement from n + m
    positions. Masses are exact Fractions summing to one.
    """
    if not 1 <= zeta <= m:
        raise ZetaOutOfRange(f"zeta must lie in 1..{m}, got {zeta}")
    if n < 0:
        raise ZetaOutOfRange(f"calibration size must be nonnegative, got {n}")
    denom = rank_simplex_size(n, m)
    pairs = []
    for k in range(1, n + 2):
        num = math.comb(k + zeta - 2, zeta - 1) * math.comb(
            n + m - k - zeta + 1, m - zeta
        )
        pairs.append((float(k), Fraction(num, denom)))
    return make_discrete_dist(pairs)


@lru_cache(maxsize=256)
def _sum_counts(m: int, max_rank: int) -> tuple[int, ...]:
    """counts[j] = number of non-decreasing m-tuples with ranks <= max_rank
    and sum = m + j, for j in 0..m*(max_rank-1).

    Computed as the coefficients of the Gaussian binomial coefficient
    [m + max_rank - 1 choose m]_x: multiply the polynomial 1 by each factor
    (1 - x^(max_rank-1+i)) and divide by (1 - x^i), i = 1..m, in place.
    """
    if m <= 0 or max_rank <= 0:
        return ()
    top = m * (max_rank - 1)
    c = [0] * (top + 1)
    c[0] = 1
    for i in range(1, m + 1):
        shift = max_rank - 1 + i
        for j in range(top, shift - 1, -1):
            c[j] -= c[j - shift]
        for j in range(i, top + 1):
            c[j] += c[j - i]
    return tuple(c)


def partition_count(m: int, n: int, k: int) -> int:
    """Number of non-decreasing m-tuples 1 <= r_1 <= ... <= r_m <= n with
    sum k; zero when k lies outside [m, m*n].
    """
    if m < 1:
        raise ValueError(f"partition_count needs m >= 1, got {m}")
    if n < 1 or k < m or k > m * n:
        return 0
    return _sum_counts(m, n)[k - m]


def sum_rank_value_counts(m: int, max_rank: int) -> dict[int, int]:
    """All sum-of-ranks counts {k: count} for ranks <= max_rank at once."""
    counts = _sum_counts(m, max_rank)
    return {m + j: c for j, c in enumerate(counts) if c}


@dataclass(frozen=True)
class CompositionalRankStep:
    """One step of a rank-ordering recursion h~(r_1..r_k) = step(h~(r_1..r_{k-1}), r_k).

    gamma_tilde maps (accumulator, rank) to a nonnegative integer and must be
    strictly increasing in the accumulator for every fixed rank (spot-checked
    by validate_step). inverse, when supplied, maps (target, rank) back to the
    accumulator or None when no accumulator reaches the target. is_addition
    declares gamma_tilde(a, r) = a + r, which unlocks the fast sum-counting
    path and skips the monotonicity spot check.
    """

    gamma_tilde: Callable[[int, int], int]
    inverse: Optional[Callable[[int, int], Optional[int]]] = None
    is_addition: bool = False


ADDITION_STEP = CompositionalRankStep(
    gamma_tilde=lambda acc, rank: acc + rank,
    inverse=lambda target, rank: target - rank if target >= rank else None,
    is_addition=True,
)


def bisection_inverse(
    gamma_tilde: Callable[[int, int], int],
) -> Callable[[int, int], Optional[int]]:
    """Generic inverse for a step that is strictly increasing in the
    accumulator: find the accumulator a with gamma_tilde(a, rank) = target,
    or None when no such a exists.
    """

    def inverse(target: int, rank: int) -> Optional[int]:
        if gamma_tilde(0, rank) > target:
            return None
        hi = 1
        while gamma_tilde(hi, rank) < target:
            hi *= 2
            if hi > 1 << 62:
                return None
        lo = 0
        while lo < hi:
            mid = (lo + hi) // 2
            if gamma_tilde(mid, rank) < target:
                lo = mid + 1
            else:
                hi = mid
        return lo if gamma_tilde(lo, rank) == target else None

    return inverse


def validate_step(
    step: CompositionalRankStep, max_rank: int, samples: int = 100
) -> None:
    """Spot-check the strict-monotonicity contract of a compositional step.

    For each rank, compares gamma_tilde at sampled accumulator pairs a < a'
    and checks inverse round-trips when an inverse is supplied. Deterministic
    (fixed internal seed). Raises StepContractViolated on any failure.
    Addition steps are exempt.
    """
    if step.is_addition:
        return
    rng = Random(1729)
    for rank in range(1, max_rank + 1):
        for _ in range(samples):
            a = rng.randrange(0, 512)
            b = a + rng.randrange(1, 64)
            va = step.gamma_tilde(a, rank)
            vb = step.gamma_tilde(b, rank)
            if not (isinstance(va, int) and isinstance(vb, int)) or va < 0 or vb < 0:
                raise StepContractViolated(
                    f"step must map to nonnegative integers, got {va!r}, {vb!r}"
                )
            if va >= vb:
                raise StepContractViolated(
                    f"gamma_tilde(.; {rank}) is not strictly increasing: "
                    f"({a} -> {va}) vs ({b} -> {vb})"
                )
            if step.inverse is not None and step.inverse(va, rank) != a:
                raise StepContractViolated(
                    f"inverse(gamma_tilde({a}; {rank}); {rank}) != {a}"
                )


def compositional_value_counts(
    step: CompositionalRankStep, m: int, max_rank: int
) -> dict[int, int]:
    """Counts {value: count} of h~ over all non-decreasing m-tuples with
    ranks <= max_rank, where h~ is the fold of the step from accumulator 0.

    Sweeps the maximum allowed rank upward and pushes each new rank through
    every tuple length, so layer m holds exactly the counts the inverse form
    of the same recursion would produce, without needing the inverse.
    """
    if m < 1:
        raise ValueError(f"need m >= 1, got {m}")
    if step.is_addition:
        return sum_rank_value_counts(m, max_rank)
    validate_step(step, max_rank)
    layers: list[dict[int, int]] = [{0: 1}] + [dict() for _ in range(m)]
    for rank in range(1, max_rank + 1):
        for length in range(1, m + 1):
            pushed: dict[int, int] = {}
            for acc, count in layers[length - 1].items():
                value = step.gamma_tilde(acc, rank)
                pushed[value] = pushed.get(value, 0) + count
            target = layers[length]
            for value, count in pushed.items():
                target[value] = target.get(value, 0) + count
    return layers[m]


def compositional_level_count(
    step: CompositionalRankStep, m: int, n: int, k: int
) -> int:
    """Number of non-decreasing m-tuples with ranks <= n whose h~ value is
    exactly k; equals partition_count(m, n, k) for the addition step.
    Out-of-range k returns 0.
    """
    if step.is_addition:
        return partition_count(m, n, k)
    return compositional_value_counts(step, m, n).get(k, 0)


def level_set_count(
    n: int, m: int, t_list: Sequence[int], rho_list: Sequence[int]
) -> int:
    """|{r in H : r_{t_1} = rho_1, ..., r_{t_l} = rho_l}|.

    The coordinates between the pinned positions range freely subject to
    monotonicity, giving a product of multiset coefficients:

        L(rho) = mc(rho_1, t_1 - 1)
                 * prod_j mc(rho_{j+1} - rho_j + 1, t_{j+1} - t_j - 1)
                 * mc(n - rho_l + 2, m - t_l),

    where mc is multiset_coeff.
    """
    t = tuple(t_list)
    rho = tuple(rho_list)
    if len(t) != len(rho):
        raise ShapeMismatch(f"t_list has length {len(t)}, rho_list {len(rho)}")
    if not t:
        raise ShapeMismatch("t_list must be nonempty")
    if any(t[j] >= t[j + 1] for j in range(len(t) - 1)):
        raise ShapeMismatch(f"t_list must be strictly increasing, got {t}")
    if not (1 <= t[0] and t[-1] <= m):
        raise ShapeMismatch(f"t_list entries must lie in 1..{m}, got {t}")
    if any(rho[j] > rho[j + 1] for j in range(len(rho) - 1)):
        raise ShapeMismatch(f"rho_list must be non-decreasing, got {rho}")
    if not all(1 <= r <= n + 1 for r in rho):
        raise ShapeMismatch(f"rho_list entries must lie in 1..{n + 1}, got {rho}")
    result = multiset_coeff(rho[0], t[0] - 1)
    for j in range(len(t) - 1):
        result *= multiset_coeff(rho[j + 1] - rho[j] + 1, t[j + 1] - t[j] - 1)
    result *= multiset_coeff(n - rho[-1] + 2, m - t[-1])
    return result


def box_count(
    n: int,
    m: int,
    t_list: Sequence[int],
    w_list: Sequence[int],
    q_list: Sequence[int],
) -> int:
    """|{r in H : w_j <= r_{t_j} <= q_j for all j}|.

    Sums level_set_count over the non-decreasing tuples rho inside the box,
    with rho_j running from max(rho_{j-1}, w_j) to q_j.
    """
    t = tuple(t_list)
    w = tuple(w_list)
    q = tuple(q_list)
    if not (len(t) == len(w) == len(q)):
        raise ShapeMismatch(
            f"lengths differ: t={len(t)}, w={len(w)}, q={len(q)}"
        )
    for j in range(len(t)):
        if not (1 <= w[j] <= q[j] <= n + 1):
            raise BoxInvalid(
                f"box bounds need 1 <= w <= q <= {n + 1}; "
                f"coordinate {j} has w={w[j]}, q={q[j]}"
            )
    total = 0
    stack: list[int] = []

    def recurse(j: int, floor: int) -> None:
        nonlocal total
        if j == len(t):
            total += level_set_count(n, m, t, tuple(stack))
            return
        for rho in range(max(floor, w[j]), q[j] + 1):
            stack.append(rho)
            recurse(j + 1, rho)
            stack.pop()

    recurse(0, 1)
    return total
