"""Monte Carlo harness: data generators, model fitters, and the coverage
experiment runner."""

import math
from fractions import Fraction

import numpy as np
import pytest

from batchpi.errors import ShapeMismatch, SingleClass
from batchpi.harness import (
    DESIGN_COUNTERFACTUAL_MEAN,
    DESIGN_REGRESSION_PAC,
    KNN,
    LINEAR,
    METHOD_BATCH_MEAN,
    METHOD_BONFERRONI,
    METHOD_CONCENTRATION,
    METHOD_PARTITION,
    THREADS_ENV_VAR,
    SimConfig,
    _mean_and_se,
    _method_parts,
    draw_counterfactual_params,
    draw_regression_params,
    fit_logistic_propensity,
    fit_simple_regressor,
    gen_counterfactual_data,
    gen_regression_data,
    gen_softplus_data,
    run_coverage_experiment,
    take_groups,
    treatment_probability,
    true_propensity_model,
)


class TestGenerators:
    def test_regression_reproducible(self):
        first = gen_regression_data(4, 30, seed=9)
        second = gen_regression_data(4, 30, seed=9)
        assert np.array_equal(first.X, second.X)
        assert np.array_equal(first.y, second.y)
        other = gen_regression_data(4, 30, seed=10)
        assert not np.array_equal(first.y, other.y)

    def test_regression_zero_noise_is_deterministic_in_x(self):
        data = gen_regression_data(3, 50, seed=2, zero_noise=True)
        mean = data.X @ data.params.beta1 + (data.X @ data.params.beta2) ** 2
        assert np.allclose(data.y, mean)
        assert np.array_equal(data.params.beta3, np.zeros(3))

    def test_regression_params_validated(self):
        with pytest.raises(ShapeMismatch):
            draw_regression_params(0, seed=1)

    def test_softplus_outcomes_positive(self):
        data = gen_softplus_data(5, 200, sigma=3.0, seed=4)
        assert np.all(data.y > 0)
        again = gen_softplus_data(5, 200, sigma=3.0, seed=4)
        assert np.array_equal(data.y, again.y)

    def test_counterfactual_observed_blends_potentials(self):
        data = gen_counterfactual_data(3, 80, seed=6)
        want = np.where(data.treated == 1, data.y_treated, data.y_control)
        assert np.array_equal(data.observed, want)
        assert set(np.unique(data.treated)) <= {0, 1}
        assert np.all((0 < data.y_control) & (data.y_control < 1))
        assert np.all((0 < data.y_treated) & (data.y_treated < 1))

    def test_propensity_model_complements_treatment_probability(self):
        params = draw_counterfactual_params(3, seed=6, strength=2.5)
        model = true_propensity_model(params)
        assert model.lower_bound == pytest.approx(
            1.0 / (1.0 + math.exp(1.25)), abs=1e-15
        )
        X = np.random.default_rng(0).uniform(0.0, 1.0, (20, 3))
        treat_prob = treatment_probability(params, X)
        for i in range(20):
            assert model.evaluate(X[i]) == pytest.approx(
                1.0 - treat_prob[i], abs=1e-12
            )
            assert model.evaluate(X[i]) >= model.lower_bound - 1e-15

    def test_take_groups_in_draw_order(self):
        data = gen_counterfactual_data(2, 100, seed=8)
        _, control_idx, treated_idx = take_groups(data, 5, 3)
        all_controls = np.flatnonzero(data.treated == 0)
        all_treated = np.flatnonzero(data.treated == 1)
        assert np.array_equal(control_idx, all_controls[:5])
        assert np.array_equal(treated_idx, all_treated[:3])

    def test_take_groups_pool_too_small(self):
        data = gen_counterfactual_data(2, 10, seed=8)
        with pytest.raises(ShapeMismatch):
            take_groups(data, 50, 50)


class TestFitters:
    def test_linear_fit_recovers_exact_linear_function(self):
        rng = np.random.default_rng(3)
        X = rng.normal(0.0, 1.0, (40, 2))
        y = 2.0 + 3.0 * X[:, 0] - 1.5 * X[:, 1]
        model = fit_simple_regressor(X, y, kind=LINEAR)
        assert np.allclose(model.predict(X), y, atol=1e-9)
        assert model.predict(np.array([1.0, 1.0]))[0] == pytest.approx(3.5)

    def test_singular_design_falls_back_to_ridge(self):
        """A duplicated column makes least squares rank deficient; the
        ridge fallback still produces finite predictions that fit.
        """
        rng = np.random.default_rng(4)
        col = rng.normal(0.0, 1.0, 30)
        X = np.column_stack([col, col])
        y = 1.0 + 2.0 * col
        model = fit_simple_regressor(X, y, kind=LINEAR)
        preds = model.predict(X)
        assert np.all(np.isfinite(preds))
        assert np.allclose(preds, y, atol=1e-3)

    def test_knn_with_one_neighbor_memorizes(self):
        X = np.array([[0.0], [1.0], [2.0]])
        y = np.array([5.0, 7.0, 9.0])
        model = fit_simple_regressor(X, y, kind=KNN, k=1)
        assert np.allclose(model.predict(X), y)

    def test_fit_input_validation(self):
        with pytest.raises(ShapeMismatch):
            fit_simple_regressor(np.empty((0, 2)), np.empty(0))
        with pytest.raises(ShapeMismatch):
            fit_simple_regressor(np.ones((3, 2)), np.ones(4))
        with pytest.raises(ValueError):
            fit_simple_regressor(np.ones((3, 2)), np.ones(3), kind="forest")

    def test_logistic_propensity_clipped(self):
        rng = np.random.default_rng(5)
        X = rng.normal(0.0, 1.0, (200, 2))
        labels = (X[:, 0] + 0.5 * rng.normal(size=200) > 0).astype(int)
        model = fit_logistic_propensity(X, labels, c_clip=0.2)
        assert model.lower_bound == 0.2
        probes = rng.normal(0.0, 3.0, (50, 2))
        values = [model.evaluate(probes[i]) for i in range(50)]
        assert all(0.2 <= v <= 1.0 for v in values)
        assert min(values) == 0.2

    def test_logistic_propensity_needs_both_classes(self):
        X = np.ones((5, 2))
        with pytest.raises(SingleClass):
            fit_logistic_propensity(X, np.zeros(5, dtype=int), c_clip=0.1)


class TestHelpers:
    def test_mean_and_se(self):
        mean, se = _mean_and_se([0.0, 1.0])
        assert mean == 0.5
        assert se == pytest.approx(0.5)
        one_mean, one_se = _mean_and_se([3.0])
        assert (one_mean, one_se) == (3.0, 0.0)
        nan_mean, nan_se = _mean_and_se([])
        assert math.isnan(nan_mean) and math.isnan(nan_se)
        inf_mean, inf_se = _mean_and_se([float("inf"), 1.0])
        assert math.isinf(inf_mean) and inf_se == 0.0

    def test_method_parts(self):
        assert _method_parts("pac:0.05") == ("pac", Fraction(1, 20))
        assert _method_parts("split") == ("split", None)

    def test_sim_config_validated(self):
        with pytest.raises(ValueError):
            SimConfig(
                design=DESIGN_REGRESSION_PAC,
                p=2,
                n_train=10,
                n=10,
                m=5,
                trials=0,
                seed=1,
                methods=("split",),
            )
        with pytest.raises(ValueError):
            SimConfig(
                design=DESIGN_REGRESSION_PAC,
                p=0,
                n_train=10,
                n=10,
                m=5,
                trials=3,
                seed=1,
                methods=("split",),
            )


def tiny_regression_config(**overrides):
    base = dict(
        design=DESIGN_REGRESSION_PAC,
        p=2,
        n_train=40,
        n=30,
        m=10,
        trials=6,
        seed=17,
        methods=("split", "pac:0.1", "markov:0.1"),
        params={"delta": Fraction(1, 10)},
    )
    base.update(overrides)
    return SimConfig(**base)


def tiny_counterfactual_config(**overrides):
    base = dict(
        design=DESIGN_COUNTERFACTUAL_MEAN,
        p=2,
        n_train=1,
        n=25,
        m=4,
        trials=5,
        seed=23,
        alpha=Fraction(1, 10),
        methods=(
            METHOD_BATCH_MEAN,
            METHOD_PARTITION,
            METHOD_BONFERRONI,
            METHOD_CONCENTRATION,
        ),
        params={"strength": 2.0},
    )
    base.update(overrides)
    return SimConfig(**base)


class TestRunCoverageExperiment:
    def test_regression_design_deterministic(self):
        first = run_coverage_experiment(tiny_regression_config())
        second = run_coverage_experiment(tiny_regression_config())
        assert first.records == second.records
        assert first.summaries == second.summaries
        assert len(first.records) == 6 * 3
        for record in first.records:
            assert 0.0 <= record.coverage_rate <= 1.0
            assert record.n_accepted == 30

    def test_summary_lookup(self):
        report = run_coverage_experiment(tiny_regression_config(trials=2))
        assert report.summary_for("split").trials == 2
        with pytest.raises(KeyError):
            report.summary_for("bootstrap")

    def test_counterfactual_design_runs(self):
        report = run_coverage_experiment(tiny_counterfactual_config())
        assert len(report.records) == 5 * 4
        for record in report.records:
            assert 0.0 <= record.width <= 1.0
            assert record.n_accepted >= 0
            assert record.coverage_rate in (0.0, 1.0)

    def test_thread_pool_matches_serial(self, monkeypatch):
        config = tiny_regression_config(trials=8)
        monkeypatch.delenv(THREADS_ENV_VAR, raising=False)
        serial = run_coverage_experiment(config)
        monkeypatch.setenv(THREADS_ENV_VAR, "3")
        threaded = run_coverage_experiment(config)
        assert serial.records == threaded.records
        assert serial.summaries == threaded.summaries

    def test_unknown_design_and_method(self):
        with pytest.raises(ValueError):
            run_coverage_experiment(
                tiny_regression_config(design="bayes_opt")
            )
        with pytest.raises(ValueError):
            run_coverage_experiment(
                tiny_regression_config(methods=("partition",))
            )

    def test_csv_and_json_outputs_stable(self, tmp_path):
        report = run_coverage_experiment(tiny_regression_config(trials=2))
        csv_a = tmp_path / "a.csv"
        csv_b = tmp_path / "b.csv"
        report.write_csv(str(csv_a))
        report.write_csv(str(csv_b))
        assert csv_a.read_bytes() == csv_b.read_bytes()
        header = csv_a.read_text().splitlines()[0]
        assert header == "trial,method,covered,coverage_rate,width,n_accepted"
        json_a = tmp_path / "a.json"
        report.write_json(str(json_a))
        text = json_a.read_text()
        assert '"design": "regression_pac"' in text
