"""Covariate shift: acceptance probabilities, rejection sampling, the
shifted batch interval, and the subset-weighted conformal baseline."""

import random
from fractions import Fraction

import pytest

from batchpi.core import Levels, order_statistics
from batchpi.covshift import (
    PropensityModel,
    acceptance_probability,
    batch_pi_covshift,
    rejection_sample,
    weighted_conformal_extended,
)
from batchpi.engine import batch_mean, batch_pi, rank_order_from_h
from batchpi.errors import (
    EnumerationCapExceeded,
    PropensityBelowBound,
    TauOutOfRange,
)

from oracles import oracle_weighted_interval


def two_point_model():
    """Covariates live on {0, 1}; the calibration arm holds units with
    probability 0.8 at x = 0 and 0.4 at x = 1, so c = 0.4 is tight.
    """
    return PropensityModel(
        evaluate=lambda x: 0.8 if x == 0 else 0.4, lower_bound=0.4
    )


class TestPropensityModel:
    def test_lower_bound_validated(self):
        for bad in (0.0, 1.0, -0.3):
            with pytest.raises(TauOutOfRange):
                PropensityModel(evaluate=lambda x: 0.5, lower_bound=bad)

    def test_acceptance_probability_frozen(self):
        """(c / (1 - c)) (1 - p) / p with c = 0.4: at p = 0.8 that is
        (2/3)(1/4) = 1/6; at p = 0.4 it is (2/3)(3/2) = 1, capped there.
        """
        model = two_point_model()
        assert acceptance_probability(model, 0) == pytest.approx(1 / 6)
        assert acceptance_probability(model, 1) == 1.0

    def test_propensity_below_bound_rejected(self):
        model = PropensityModel(evaluate=lambda x: 0.2, lower_bound=0.4)
        with pytest.raises(PropensityBelowBound):
            acceptance_probability(model, 0)


class TestRejectionSample:
    def test_deterministic_given_seed(self):
        model = two_point_model()
        features = [0, 1, 0, 1, 0, 0, 1]
        first = rejection_sample(features, model, seed=11)
        second = rejection_sample(features, model, seed=11)
        assert first == second
        assert len(first) == len(features)

    def test_empty_features(self):
        assert rejection_sample([], two_point_model(), seed=3) == ()

    def test_always_accepts_at_the_bound(self):
        """Units whose propensity equals the lower bound have acceptance
        probability one, so they always survive.
        """
        model = two_point_model()
        for seed in range(25):
            mask = rejection_sample([1, 1, 1], model, seed=seed)
            assert mask == (True, True, True)

    def test_acceptance_rate_matches_probability(self):
        model = two_point_model()
        accepted = 0
        trials = 4000
        for seed in range(trials):
            accepted += rejection_sample([0], model, seed=seed)[0]
        rate = accepted / trials
        assert abs(rate - 1 / 6) < 0.02


class TestBatchPiCovshift:
    def test_equals_batch_pi_on_accepted_scores(self):
        model = two_point_model()
        rng = random.Random(8)
        cal = [
            (rng.choice((0, 1)), round(rng.uniform(0, 1), 3))
            for _ in range(14)
        ]
        levels = Levels.symmetric(Fraction(1, 5))
        h = batch_mean(3)
        order = rank_order_from_h(h)
        seed = 77
        got = batch_pi_covshift(
            cal, 3, model, h, order, levels, seed=seed, score_range=(0.0, 1.0)
        )
        mask = rejection_sample([x for x, _ in cal], model, seed)
        accepted = [s for (_, s), keep in zip(cal, mask) if keep]
        want = batch_pi(
            order_statistics(accepted, score_range=(0.0, 1.0)),
            3,
            h,
            order,
            levels,
        )
        assert (got.lower, got.upper) == (want.lower, want.upper)

    def test_empty_accepted_set_degrades_to_score_range(self):
        """A model that rejects every unit leaves no calibration scores, so
        the interval is the full score range pushed through the mean.
        """
        model = PropensityModel(evaluate=lambda x: 1.0 - 1e-12, lower_bound=0.5)
        cal = [(0, 0.3), (0, 0.6)]
        h = batch_mean(2)
        got = batch_pi_covshift(
            cal,
            2,
            model,
            h,
            rank_order_from_h(h),
            Levels.symmetric(Fraction(1, 10)),
            seed=0,
            score_range=(0.0, 1.0),
        )
        assert (got.lower, got.upper) == (0.0, 1.0)


class TestWeightedConformalExtended:
    def test_matches_oracle_randomized(self):
        rng = random.Random(2718)
        for _ in range(25):
            n = rng.randint(1, 7)
            m = rng.randint(1, 3)
            cal = [
                (rng.choice((0, 1)), round(rng.uniform(0, 1), 3))
                for _ in range(n)
            ]
            test_features = [rng.choice((0, 1)) for _ in range(m)]
            model = two_point_model()
            levels = Levels.symmetric(Fraction(1, 5))
            h = batch_mean(m)
            got = weighted_conformal_extended(
                cal, test_features, model, h, levels, score_range=(0.0, 1.0)
            )

            def ratio(x):
                p = Fraction(4, 5) if x == 0 else Fraction(2, 5)
                return (1 - p) / p

            want = oracle_weighted_interval(
                [(ratio(x), s) for x, s in cal],
                m,
                0.0,
                1.0,
                [ratio(x) for x in test_features],
                h.evaluate,
                levels.beta,
                levels.gamma,
            )
            assert (got.lower, got.upper) == want, (cal, test_features)

    def test_shape_checked(self):
        from batchpi.errors import ShapeMismatch

        with pytest.raises(ShapeMismatch):
            weighted_conformal_extended(
                [(0, 0.5)],
                [0, 1],
                two_point_model(),
                batch_mean(3),
                Levels.symmetric(Fraction(1, 10)),
            )

    def test_enumeration_cap(self):
        cal = [(0, i / 40) for i in range(30)]
        with pytest.raises(EnumerationCapExceeded):
            weighted_conformal_extended(
                cal,
                [0] * 10,
                two_point_model(),
                batch_mean(10),
                Levels.symmetric(Fraction(1, 10)),
            )

    def test_low_propensity_rejected(self):
        model = PropensityModel(evaluate=lambda x: 0.3, lower_bound=0.4)
        with pytest.raises(PropensityBelowBound):
            weighted_conformal_extended(
                [(0, 0.5)],
                [0],
                model,
                batch_mean(1),
                Levels.symmetric(Fraction(1, 10)),
            )

    def test_mostly_sentinel_subsets_give_wide_interval(self):
        """With m comparable to n nearly every subset touches a sentinel
        score. At beta = gamma = 1/40 each subset's mass 1/20 exceeds the
        allowance on both sides, so the baseline returns the whole range.
        """
        cal = [(0, 0.45), (0, 0.5), (0, 0.55)]
        h = batch_mean(3)
        got = weighted_conformal_extended(
            cal,
            [0, 0, 0],
            two_point_model(),
            h,
            Levels.symmetric(Fraction(1, 20)),
            score_range=(0.0, 1.0),
        )
        assert got.lower == 0.0
        assert got.upper == 1.0
