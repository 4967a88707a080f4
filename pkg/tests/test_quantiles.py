"""Order-statistic targets: single-quantile intervals, the coverage
over-shoot bound, sparse batch functions, simultaneous quantile bounds,
and quartiles."""

import itertools
import math
import random
from fractions import Fraction

import pytest

from batchpi.core import Levels, order_statistics
from batchpi.engine import batch_sum, rank_order_from_h
from batchpi.errors import (
    ShapeMismatch,
    SparsityCapExceeded,
    TauOutOfRange,
    ZetaOutOfRange,
)
from batchpi.quantiles import (
    MultiQuantileBounds,
    QuantileTarget,
    coverage_upper_epsilon,
    multi_quantile_bounds,
    quantile_interval,
    quartile_bounds,
    sparse_batch_pi,
)

from oracles import (
    oracle_epsilon,
    oracle_interval,
    simplex_size,
)


class TestQuantileTarget:
    def test_for_batch_rounds_up(self):
        t = QuantileTarget.for_batch("0.1", 10)
        assert t.zeta == 9
        assert QuantileTarget.for_batch("0.5", 5).zeta == 3

    def test_delta_range(self):
        with pytest.raises(TauOutOfRange):
            QuantileTarget(delta=Fraction(-1, 10), zeta=1)
        with pytest.raises(TauOutOfRange):
            QuantileTarget(delta=Fraction(1), zeta=1)

    def test_zeta_range(self):
        with pytest.raises(ZetaOutOfRange):
            QuantileTarget(delta=Fraction(1, 10), zeta=0)


class TestQuantileInterval:
    def test_frozen_one_sided_upper_hits_sentinel(self):
        scores = order_statistics([1.0, 2.0, 3.0])
        target = QuantileTarget(delta=Fraction(1, 10), zeta=2)
        got = quantile_interval(
            scores, 2, target, Levels(beta=0, gamma=Fraction(1, 10))
        )
        assert got.upper == float("inf")
        assert got.lower == float("-inf")

    def test_zeta_beyond_m_rejected(self):
        scores = order_statistics([1.0, 2.0, 3.0])
        with pytest.raises(ZetaOutOfRange):
            quantile_interval(
                scores,
                2,
                QuantileTarget(delta=Fraction(1, 10), zeta=3),
                Levels.symmetric(Fraction(1, 10)),
            )

    def test_matches_oracle_randomized(self):
        rng = random.Random(77)
        for _ in range(40):
            n = rng.randint(1, 9)
            m = rng.randint(1, 4)
            zeta = rng.randint(1, m)
            raw = sorted(round(rng.uniform(-9, 9), 3) for _ in range(n))
            scores = order_statistics(raw)
            levels = Levels.symmetric(Fraction(1, 5))
            got = quantile_interval(
                scores, m, QuantileTarget(delta=Fraction(1, 10), zeta=zeta), levels
            )
            want = oracle_interval(
                raw,
                float("-inf"),
                float("inf"),
                m,
                lambda t: t[zeta - 1],
                lambda r: float(r[zeta - 1]),
                levels.beta,
                levels.gamma,
            )
            assert (got.lower, got.upper) == want


class TestCoverageEpsilon:
    def test_frozen_values(self):
        assert coverage_upper_epsilon(3, 2, 2) == Fraction(2, 5)
        for n in (1, 4, 10, 33):
            assert coverage_upper_epsilon(n, 1, 1) == Fraction(1, n + 1)

    def test_matches_enumeration(self):
        for n, m, zeta in [(4, 2, 1), (5, 3, 2), (7, 4, 4), (10, 4, 1)]:
            assert coverage_upper_epsilon(n, m, zeta) == oracle_epsilon(n, m, zeta)

    def test_provable_bound(self):
        """epsilon <= m! / ((zeta-1)! (m-zeta)!) * (n+m)^(m-1) / n^m, which
        goes to zero at rate 1/n for fixed m.
        """
        for n in (5, 10, 40, 90):
            for m in (1, 2, 4):
                for zeta in range(1, m + 1):
                    eps = coverage_upper_epsilon(n, m, zeta)
                    factor = Fraction(
                        math.factorial(m),
                        math.factorial(zeta - 1) * math.factorial(m - zeta),
                    )
                    bound = factor * Fraction((n + m) ** (m - 1), n**m)
                    assert eps <= bound, (n, m, zeta)


class TestSparseBatchPi:
    def test_matches_oracle_randomized(self):
        rng = random.Random(501)
        for _ in range(25):
            n = rng.randint(1, 7)
            m = rng.randint(2, 4)
            t1 = rng.randint(1, m - 1)
            t2 = rng.randint(t1 + 1, m)
            raw = sorted(round(rng.uniform(-9, 9), 3) for _ in range(n))
            scores = order_statistics(raw)
            levels = Levels.symmetric(Fraction(1, 5))
            h_prime = batch_sum(2)
            order_prime = rank_order_from_h(batch_sum(2))
            got = sparse_batch_pi(
                scores, m, (t1, t2), h_prime, order_prime, levels
            )
            want = oracle_interval(
                raw,
                float("-inf"),
                float("inf"),
                m,
                lambda t: (0.0 + t[t1 - 1]) + t[t2 - 1],
                lambda r: float((0 + r[t1 - 1]) + r[t2 - 1]),
                levels.beta,
                levels.gamma,
            )
            assert (got.lower, got.upper) == want, (n, m, t1, t2, raw)

    def test_length_cap(self):
        scores = order_statistics([1.0, 2.0])
        with pytest.raises(SparsityCapExceeded):
            sparse_batch_pi(
                scores,
                8,
                (1, 2, 3, 4),
                batch_sum(4),
                rank_order_from_h(batch_sum(4)),
                Levels.symmetric(Fraction(1, 10)),
            )

    def test_t_list_validated(self):
        scores = order_statistics([1.0, 2.0])
        with pytest.raises(ShapeMismatch):
            sparse_batch_pi(
                scores,
                3,
                (2, 2),
                batch_sum(2),
                rank_order_from_h(batch_sum(2)),
                Levels.symmetric(Fraction(1, 10)),
            )


def brute_force_multi_quantile(raw, m, t_list, alpha):
    """Independent reimplementation: smallest symmetric box expansion a
    around the rescaled centers whose simplex mass reaches 1 - alpha.
    """
    n = len(raw)
    centers = [
        int(Fraction(t * n, m) + Fraction(1, 2))
        if Fraction(t * n, m) % 1 != Fraction(1, 2)
        else int(Fraction(t * n, m)) + 1
        for t in t_list
    ]
    total = simplex_size(n, m)
    need = (1 - alpha) * total
    tuples = list(
        itertools.combinations_with_replacement(range(1, n + 2), m)
    )
    for a in range(0, n + 2):
        w = [max(c - a, 1) for c in centers]
        q = [min(c + a, n + 1) for c in centers]
        if any(qj < wj for wj, qj in zip(w, q)):
            continue
        hits = sum(
            1
            for r in tuples
            if all(
                wj <= r[t - 1] <= qj
                for t, wj, qj in zip(t_list, w, q)
            )
        )
        if Fraction(hits) >= need:
            ext = [float("-inf")] + list(raw) + [float("inf")]
            lower = tuple(ext[max(c - a - 1, 0)] for c in centers)
            upper = tuple(ext[min(c + a, n + 1)] for c in centers)
            return lower, upper
    raise AssertionError("no expansion reached the target mass")


class TestMultiQuantileBounds:
    def test_frozen_even_grid(self):
        """Eight equally spaced scores, batch of four, quartile ranks: the
        smallest symmetric expansion is a = 4, giving lower bounds
        (-inf, 2) and upper bounds (12, +inf).
        """
        raw = [2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0]
        scores = order_statistics(raw)
        got = multi_quantile_bounds(scores, 4, (1, 3), Fraction(1, 10))
        assert got.L == (float("-inf"), 2.0)
        assert got.U == (12.0, float("inf"))

    def test_matches_brute_force_randomized(self):
        rng = random.Random(321)
        for _ in range(20):
            n = rng.randint(2, 8)
            m = rng.randint(2, 4)
            size = rng.randint(1, min(3, m))
            t_list = tuple(sorted(rng.sample(range(1, m + 1), size)))
            raw = sorted(round(rng.uniform(-9, 9), 3) for _ in range(n))
            scores = order_statistics(raw)
            alpha = Fraction(1, 10)
            got = multi_quantile_bounds(scores, m, t_list, alpha)
            want_l, want_u = brute_force_multi_quantile(raw, m, t_list, alpha)
            assert got.L == want_l and got.U == want_u, (n, m, t_list, raw)

    def test_alpha_validated(self):
        scores = order_statistics([1.0, 2.0])
        with pytest.raises(TauOutOfRange):
            multi_quantile_bounds(scores, 2, (1,), Fraction(0))

    def test_bounds_ordering_invariant(self):
        with pytest.raises(ValueError):
            MultiQuantileBounds(L=(2.0,), U=(1.0,), t_list=(1,))

    def test_simultaneous_coverage_mass(self):
        """The box the bounds came from holds at least 1 - alpha of the
        rank-simplex mass.
        """
        raw = [float(i) for i in range(1, 9)]
        n, m = 8, 4
        alpha = Fraction(1, 10)
        got = multi_quantile_bounds(order_statistics(raw), m, (1, 3), alpha)
        tuples = list(
            itertools.combinations_with_replacement(range(1, n + 2), m)
        )
        ext = [float("-inf")] + raw + [float("inf")]
        hits = sum(
            1
            for r in tuples
            if all(
                lo <= ext[r[t - 1]] and ext[max(r[t - 1] - 1, 0)] <= hi
                for t, lo, hi in zip((1, 3), got.L, got.U)
            )
        )
        assert Fraction(hits, len(tuples)) >= 1 - alpha


class TestQuartileBounds:
    def test_frozen_even_grid(self):
        """Same instance as the simultaneous-bounds test: the one-sided
        quartile construction needs only a = 2, giving a finite upper
        endpoint while remaining inside the two-sided bounds.
        """
        raw = [2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0]
        scores = order_statistics(raw)
        lower, upper = quartile_bounds(scores, 4, Fraction(1, 10))
        assert lower == float("-inf")
        assert upper == 16.0

    def test_contained_in_two_sided_bounds(self):
        rng = random.Random(92)
        for _ in range(15):
            n = rng.randint(4, 9)
            m = rng.randint(2, 5)
            raw = sorted(round(rng.uniform(-9, 9), 3) for _ in range(n))
            scores = order_statistics(raw)
            alpha = Fraction(1, 10)
            lower, upper = quartile_bounds(scores, m, alpha)
            t1 = max(round(m / 4), 1)
            t2 = max(round(3 * m / 4), 1)
            t_list = (t1, t2) if t1 < t2 else (t1,)
            mq = multi_quantile_bounds(scores, m, t_list, alpha)
            assert mq.L[0] <= lower
            assert upper <= mq.U[-1]

    def test_needs_two_points(self):
        scores = order_statistics([1.0, 2.0])
        with pytest.raises(ShapeMismatch):
            quartile_bounds(scores, 1, Fraction(1, 10))
