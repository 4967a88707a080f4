"""Synthetic data generators and the Monte Carlo coverage driver.

Three data designs are provided: a heteroscedastic regression with
quadratic signal, a softplus outcome model used for selection tasks, and a
counterfactual design with logistic treatment assignment and Beta
counterfactual outcomes. A small regression fitter and a logistic
propensity fitter stand in for heavier learners; every guarantee under
test is score-agnostic, so the model choice affects only interval width.

Seed discipline: one master seed is split into named substreams through
numpy SeedSequence spawn keys, so parameter draws, per-trial data draws,
and rejection-sampling masks never share a stream, and trials are
reproducible independently of scheduling.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .applications import MEAN, counterfactual_interval
from .baselines import (
    bonferroni_baseline,
    concentration_mean_interval,
    group_scores,
    markov_pac_rank,
    partition_baseline,
)
from .core import (
    CalibrationScores,
    Levels,
    PredictionInterval,
    as_fraction,
    ceil_fraction,
    order_statistics,
)
from .covshift import PropensityModel, rejection_sample
from .engine import batch_mean
from .errors import BatchPIError, ShapeMismatch, SingleClass, SingularDesign
from .applications import pac_rank

PARAMS_STREAM = 0
TRIAL_STREAM = 1
REJECTION_STREAM = 2

LINEAR = "linear"
KNN = "knn"

THREADS_ENV_VAR = "BATCHPI_THREADS"


def _rng(*entropy: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy))


@dataclass(frozen=True)
class RegressionParams:
    mu_x: np.ndarray
    beta1: np.ndarray
    beta2: np.ndarray
    beta3: np.ndarray


@dataclass(frozen=True)
class RegressionData:
    X: np.ndarray
    y: np.ndarray
    params: RegressionParams


def draw_regression_params(
    p: int, seed: int, zero_noise: bool = False
) -> RegressionParams:
    """Entrywise uniform parameter draw on [0, 1], made once per experiment
    from the parameter substream. zero_noise zeroes the noise coefficient
    so the outcome becomes a deterministic function of the features.
    """
    if p < 1:
        raise ShapeMismatch(f"dimension must be at least 1, got {p}")
    rng = _rng(seed, PARAMS_STREAM)
    mu_x = rng.uniform(0.0, 1.0, p)
    beta1 = rng.uniform(0.0, 1.0, p)
    beta2 = rng.uniform(0.0, 1.0, p)
    beta3 = rng.uniform(0.0, 1.0, p)
    if zero_noise:
        beta3 = np.zeros(p)
    return RegressionParams(mu_x=mu_x, beta1=beta1, beta2=beta2, beta3=beta3)


def sample_regression(
    params: RegressionParams, size: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    p = params.mu_x.shape[0]
    X = rng.normal(0.0, 1.0, (size, p)) * math.sqrt(5.0) + params.mu_x
    mean = X @ params.beta1 + (X @ params.beta2) ** 2
    sd = np.abs(X @ params.beta3)
    y = mean + sd * rng.normal(0.0, 1.0, size)
    return X, y


def gen_regression_data(
    p: int, size: int, seed: int, zero_noise: bool = False
) -> RegressionData:
    """Features normal with mean mu_x and covariance 5 I, outcome normal
    with mean beta1' x + (beta2' x)^2 and standard deviation |beta3' x|.
    """
    params = draw_regression_params(p, seed, zero_noise=zero_noise)
    X, y = sample_regression(params, size, _rng(seed, TRIAL_STREAM))
    return RegressionData(X=X, y=y, params=params)


@dataclass(frozen=True)
class SoftplusParams:
    mu_x: np.ndarray
    beta: np.ndarray


@dataclass(frozen=True)
class SoftplusData:
    X: np.ndarray
    y: np.ndarray
    params: SoftplusParams


def draw_softplus_params(p: int, seed: int) -> SoftplusParams:
    if p < 1:
        raise ShapeMismatch(f"dimension must be at least 1, got {p}")
    rng = _rng(seed, PARAMS_STREAM)
    return SoftplusParams(
        mu_x=rng.uniform(0.0, 1.0, p), beta=rng.uniform(0.0, 1.0, p)
    )


def sample_softplus(
    params: SoftplusParams, size: int, sigma: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    p = params.mu_x.shape[0]
    X = rng.normal(0.0, 1.0, (size, p)) * math.sqrt(5.0) + params.mu_x
    z = rng.normal(0.0, 1.0, size)
    y = np.logaddexp(0.0, X @ params.beta + sigma * z)
    return X, y


def gen_softplus_data(
    p: int, size: int, sigma: float, seed: int
) -> SoftplusData:
    """Features normal with mean mu_x and covariance 5 I, outcome the
    softplus log(1 + exp(beta' x + sigma z)); always positive.
    """
    params = draw_softplus_params(p, seed)
    X, y = sample_softplus(params, size, sigma, _rng(seed, TRIAL_STREAM))
    return SoftplusData(X=X, y=y, params=params)


@dataclass(frozen=True)
class CounterfactualParams:
    beta_treat: np.ndarray
    beta_outcome: np.ndarray
    strength: float


@dataclass(frozen=True)
class CounterfactualData:
    X: np.ndarray
    treated: np.ndarray
    y_control: np.ndarray
    y_treated: np.ndarray
    observed: np.ndarray
    params: CounterfactualParams


def draw_counterfactual_params(
    p: int, seed: int, strength: float = 1.833
) -> CounterfactualParams:
    """Entrywise uniform coefficient draws, then rescaling: the outcome
    coefficients are scaled so beta_outcome' x stays within [0, 0.99] on
    the unit cube (the Beta parameters must stay positive), and the
    treatment coefficients are normalized to sum 1 so the treatment logit
    strength * (beta_treat' x - 1/2) spans [-strength/2, strength/2].
    """
    if p < 1:
        raise ShapeMismatch(f"dimension must be at least 1, got {p}")
    rng = _rng(seed, PARAMS_STREAM)
    beta_treat = rng.uniform(0.0, 1.0, p)
    beta_outcome = rng.uniform(0.0, 1.0, p)
    beta_treat = beta_treat / beta_treat.sum()
    beta_outcome = 0.99 * beta_outcome / beta_outcome.sum()
    return CounterfactualParams(
        beta_treat=beta_treat, beta_outcome=beta_outcome, strength=strength
    )


def treatment_probability(
    params: CounterfactualParams, X: np.ndarray
) -> np.ndarray:
    logit = params.strength * (X @ params.beta_treat - 0.5)
    return 1.0 / (1.0 + np.exp(-logit))


def true_propensity_model(params: CounterfactualParams) -> PropensityModel:
    """Probability of being untreated given features, with its exact lower
    bound sigmoid(-strength / 2) over the unit cube.
    """
    bound = 1.0 / (1.0 + math.exp(params.strength / 2.0))

    def evaluate(x) -> float:
        logit = params.strength * (float(np.dot(x, params.beta_treat)) - 0.5)
        return 1.0 / (1.0 + math.exp(logit))

    return PropensityModel(evaluate=evaluate, lower_bound=bound)


def sample_counterfactual(
    params: CounterfactualParams, size: int, rng: np.random.Generator
) -> CounterfactualData:
    p = params.beta_treat.shape[0]
    X = rng.uniform(0.0, 1.0, (size, p))
    prob = treatment_probability(params, X)
    treated = (rng.uniform(0.0, 1.0, size) < prob).astype(int)
    shift = X @ params.beta_outcome
    y_control = rng.beta(1.0 + shift, 1.0 - shift)
    y_treated = rng.beta(1.0 - shift, 1.0 + shift)
    observed = np.where(treated == 1, y_treated, y_control)
    return CounterfactualData(
        X=X,
        treated=treated,
        y_control=y_control,
        y_treated=y_treated,
        observed=observed,
        params=params,
    )


def gen_counterfactual_data(
    p: int, size: int, seed: int, strength: float = 1.833
) -> CounterfactualData:
    """Features uniform on the unit cube, logistic treatment assignment,
    Beta(1 + x'b, 1 - x'b) control outcome and Beta(1 - x'b, 1 + x'b)
    treated outcome, both counterfactuals stored.
    """
    params = draw_counterfactual_params(p, seed, strength=strength)
    return sample_counterfactual(params, size, _rng(seed, TRIAL_STREAM))


def take_groups(
    data: CounterfactualData, n_controls: int, m_treated: int
) -> tuple[CounterfactualData, np.ndarray, np.ndarray]:
    """First n_controls untreated and first m_treated treated units, in
    draw order; raises if the pool is too small.
    """
    control_idx = np.flatnonzero(data.treated == 0)[:n_controls]
    treated_idx = np.flatnonzero(data.treated == 1)[:m_treated]
    if len(control_idx) < n_controls or len(treated_idx) < m_treated:
        raise ShapeMismatch(
            f"pool of {len(data.treated)} units has only "
            f"{np.sum(data.treated == 0)} controls and "
            f"{np.sum(data.treated == 1)} treated"
        )
    return data, control_idx, treated_idx


class SimpleRegressor:
    """Linear least squares fit with an intercept; rank-deficient designs
    fall back to ridge with a fixed small regularizer instead of raising.
    """

    def __init__(self, coef: np.ndarray):
        self.coef = coef

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        design = np.hstack([np.ones((X.shape[0], 1)), X])
        return design @ self.coef


class KnnRegressor:
    def __init__(self, X: np.ndarray, y: np.ndarray, k: int):
        from sklearn.neighbors import KNeighborsRegressor

        self.model = KNeighborsRegressor(n_neighbors=k)
        self.model.fit(np.asarray(X, dtype=float), np.asarray(y, dtype=float))

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        return self.model.predict(X)


RIDGE_REGULARIZER = 1e-6


def fit_simple_regressor(X, y, kind: str = LINEAR, k: int = 5):
    """Deterministic regression fit used to build scores. kind is linear
    (least squares, ridge fallback for singular designs) or knn.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.shape[0] == 0:
        raise ShapeMismatch("regression fit needs a nonempty training set")
    if X.shape[0] != y.shape[0]:
        raise ShapeMismatch(
            f"{X.shape[0]} feature rows but {y.shape[0]} outcomes"
        )
    if kind == LINEAR:
        design = np.hstack([np.ones((X.shape[0], 1)), X])
        coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
        if rank < design.shape[1]:
            gram = design.T @ design + RIDGE_REGULARIZER * np.eye(
                design.shape[1]
            )
            try:
                coef = np.linalg.solve(gram, design.T @ y)
            except np.linalg.LinAlgError as exc:
                raise SingularDesign(
                    "design matrix is singular even after ridge regularization"
                ) from exc
        return SimpleRegressor(coef)
    if kind == KNN:
        return KnnRegressor(X, y, k)
    raise ValueError(f"unknown regressor kind {kind!r}")


def fit_logistic_propensity(X, labels, c_clip: float) -> PropensityModel:
    """Logistic fit of P(label = 1 | x), returned as a propensity model
    whose evaluations are clipped to [c_clip, 1]. Pass label 1 for units
    belonging to the calibration side of the shift.
    """
    from sklearn.linear_model import LogisticRegression

    X = np.asarray(X, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    classes = set(labels.tolist())
    if classes != {0, 1}:
        raise SingleClass(
            f"propensity fit needs both classes, got labels {sorted(classes)}"
        )
    model = LogisticRegression(max_iter=1000)
    model.fit(X, labels)

    def evaluate(x) -> float:
        arr = np.asarray(x, dtype=float).reshape(1, -1)
        prob = float(model.predict_proba(arr)[0, 1])
        return min(max(prob, c_clip), 1.0)

    return PropensityModel(evaluate=evaluate, lower_bound=c_clip)


DESIGN_REGRESSION_PAC = "regression_pac"
DESIGN_COUNTERFACTUAL_MEAN = "counterfactual_mean"

METHOD_SPLIT = "split"
METHOD_PAC = "pac"
METHOD_MARKOV = "markov"
METHOD_BATCH_MEAN = "batch"
METHOD_PARTITION = "partition"
METHOD_BONFERRONI = "bonferroni"
METHOD_CONCENTRATION = "concentration"


@dataclass(frozen=True)
class SimConfig:
    """Full description of one Monte Carlo experiment; the same config,
    including the seed, always reproduces the same report byte for byte.

    methods entries are method names, optionally parameterized with a
    colon, for example pac:0.05. params carries design-specific settings
    such as delta, sigma, cutoff, strength, or estimate_propensity.
    """

    design: str
    p: int
    n_train: int
    n: int
    m: int
    trials: int
    seed: int
    methods: tuple[str, ...]
    alpha: Fraction = Fraction(1, 10)
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError(f"trials must be at least 1, got {self.trials}")
        for name, value in (
            ("p", self.p),
            ("n_train", self.n_train),
            ("n", self.n),
            ("m", self.m),
        ):
            if value < 1:
                raise ValueError(f"{name} must be positive, got {value}")
        object.__setattr__(self, "alpha", as_fraction(self.alpha))


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    method: str
    covered: bool
    coverage_rate: float
    width: float
    n_accepted: int


@dataclass(frozen=True)
class TrialError:
    trial: int
    method: str
    message: str


@dataclass(frozen=True)
class MethodSummary:
    method: str
    trials: int
    mean_coverage: float
    coverage_se: float
    prob_target: float
    prob_target_se: float
    mean_width: float
    width_se: float
    mean_n_accepted: float


@dataclass(frozen=True)
class CoverageReport:
    config: SimConfig
    records: tuple[TrialRecord, ...]
    errors: tuple[TrialError, ...]
    summaries: tuple[MethodSummary, ...]

    def summary_for(self, method: str) -> MethodSummary:
        for s in self.summaries:
            if s.method == method:
                return s
        raise KeyError(method)

    def write_csv(self, path: str) -> None:
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(
                ["trial", "method", "covered", "coverage_rate", "width", "n_accepted"]
            )
            for r in self.records:
                writer.writerow(
                    [
                        r.trial,
                        r.method,
                        int(r.covered),
                        repr(r.coverage_rate),
                        _json_float(r.width),
                        r.n_accepted,
                    ]
                )

    def summary_dict(self) -> dict:
        return {
            "design": self.config.design,
            "trials": self.config.trials,
            "seed": self.config.seed,
            "error_count": len(self.errors),
            "methods": {
                s.method: {
                    "mean_coverage": _json_float(s.mean_coverage),
                    "coverage_se": _json_float(s.coverage_se),
                    "prob_target": _json_float(s.prob_target),
                    "prob_target_se": _json_float(s.prob_target_se),
                    "mean_width": _json_float(s.mean_width),
                    "width_se": _json_float(s.width_se),
                    "mean_n_accepted": _json_float(s.mean_n_accepted),
                }
                for s in self.summaries
            },
        }

    def write_json(self, path: str) -> None:
        with open(path, "w") as handle:
            json.dump(self.summary_dict(), handle, sort_keys=True, indent=2)
            handle.write("\n")


def _json_float(value: float):
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def _mean_and_se(values: Sequence[float]) -> tuple[float, float]:
    k = len(values)
    if k == 0:
        return float("nan"), float("nan")
    mean = sum(values) / k
    if k == 1 or math.isinf(mean):
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (k - 1)
    return mean, math.sqrt(var / k)


def _method_parts(method: str) -> tuple[str, Optional[Fraction]]:
    if ":" in method:
        base, raw = method.split(":", 1)
        return base, as_fraction(raw)
    return method, None


def _regression_pac_trial(
    config: SimConfig,
    params: RegressionParams,
    predict: Callable[[np.ndarray], np.ndarray],
    trial: int,
) -> list[TrialRecord]:
    n, m = config.n, config.m
    delta = as_fraction(config.params.get("delta", Fraction(1, 10)))
    target = 1.0 - float(delta)
    rng = _rng(config.seed, TRIAL_STREAM, trial)
    X, y = sample_regression(params, n + m, rng)
    scores_all = np.abs(y - predict(X))
    cal = order_statistics(
        [float(v) for v in scores_all[:n]], score_range=(0.0, float("inf"))
    )
    test = scores_all[n:]
    records = []
    for method in config.methods:
        base, level = _method_parts(method)
        alpha = level if level is not None else config.alpha
        if base == METHOD_SPLIT:
            rank = ceil_fraction((1 - delta) * (n + 1))
        elif base == METHOD_PAC:
            rank = pac_rank(n, m, delta, alpha).r
        elif base == METHOD_MARKOV:
            rank = markov_pac_rank(n, m, delta, alpha)
        else:
            raise ValueError(
                f"method {method!r} is not part of the {config.design} design"
            )
        threshold = cal.order_stat(rank)
        coverage = float(np.mean(test <= threshold))
        records.append(
            TrialRecord(
                trial=trial,
                method=method,
                covered=coverage >= target,
                coverage_rate=coverage,
                width=2.0 * threshold,
                n_accepted=n,
            )
        )
    return records


def _counterfactual_mean_trial(
    config: SimConfig, params: CounterfactualParams, trial: int
) -> list[TrialRecord]:
    n, m = config.n, config.m
    alpha = config.alpha
    pool = max(4 * (n + m), 200)
    rng = _rng(config.seed, TRIAL_STREAM, trial)
    data = sample_counterfactual(params, pool, rng)
    data, control_idx, treated_idx = take_groups(data, n, m)

    if config.params.get("estimate_propensity", False):
        keep = np.concatenate([control_idx, treated_idx])
        model = fit_logistic_propensity(
            data.X[keep],
            1 - data.treated[keep],
            c_clip=true_propensity_model(params).lower_bound,
        )
    else:
        model = true_propensity_model(params)

    observed = [
        (data.X[i], int(data.treated[i]), float(data.observed[i]))
        for i in np.concatenate([control_idx, treated_idx])
    ]
    target_value = float(np.mean(data.y_control[treated_idx]))
    rejection_seed = int(
        _rng(config.seed, REJECTION_STREAM, trial).integers(0, 2**63 - 1)
    )

    control_features = [data.X[i] for i in control_idx]
    control_scores = [float(data.observed[i]) for i in control_idx]
    mask = rejection_sample(control_features, model, rejection_seed)
    accepted = [s for s, keep in zip(control_scores, mask) if keep]
    accepted_stats = order_statistics(accepted, score_range=(0.0, 1.0))
    n_acc = len(accepted)
    levels = Levels.one_sided_upper(alpha)

    records = []
    for method in config.methods:
        base, _ = _method_parts(method)
        if base == METHOD_BATCH_MEAN:
            interval = counterfactual_interval(
                observed,
                model,
                MEAN,
                alpha,
                seed=rejection_seed,
                outcome_range=(0.0, 1.0),
            )
        elif n_acc == 0:
            # No accepted calibration point: every baseline degrades to the
            # full outcome range.
            interval = PredictionInterval(
                lower=0.0, upper=1.0, levels=levels
            )
        elif base == METHOD_PARTITION:
            grouped = group_scores(accepted, m)
            g_values = [
                batch_mean(m).evaluate(tuple(sorted(g))) for g in grouped.groups
            ]
            interval = partition_baseline(g_values, levels)
        elif base == METHOD_BONFERRONI:
            interval = bonferroni_baseline(
                accepted_stats, m, batch_mean(m), levels
            )
        elif base == METHOD_CONCENTRATION:
            interval = concentration_mean_interval(
                accepted, m, 0.0, 1.0, alpha
            )
        else:
            raise ValueError(
                f"method {method!r} is not part of the {config.design} design"
            )
        # The task is a one-sided upper bound on a [0, 1] mean, so the
        # interval's informative extent is its clipped upper endpoint; a
        # width of exactly 1.0 means the bound is vacuous.
        upper = min(interval.upper, 1.0)
        records.append(
            TrialRecord(
                trial=trial,
                method=method,
                covered=target_value <= interval.upper,
                coverage_rate=1.0 if target_value <= interval.upper else 0.0,
                width=upper,
                n_accepted=n_acc,
            )
        )
    return records


def run_coverage_experiment(config: SimConfig) -> CoverageReport:
    """Repeat the configured design over independent trials, apply every
    configured method to the same per-trial data, and aggregate coverage,
    target-attainment, and width statistics with standard errors. Method
    failures abort that trial for that method and are recorded.
    """
    if config.design == DESIGN_REGRESSION_PAC:
        params = draw_regression_params(config.p, config.seed)
        train_rng = _rng(config.seed, TRIAL_STREAM, 0)
        X_train, y_train = sample_regression(params, config.n_train, train_rng)
        model = fit_simple_regressor(
            X_train, y_train, kind=config.params.get("model_kind", LINEAR)
        )

        def one_trial(trial: int) -> list[TrialRecord]:
            return _regression_pac_trial(config, params, model.predict, trial)

    elif config.design == DESIGN_COUNTERFACTUAL_MEAN:
        params = draw_counterfactual_params(
            config.p, config.seed, strength=config.params.get("strength", 1.833)
        )

        def one_trial(trial: int) -> list[TrialRecord]:
            return _counterfactual_mean_trial(config, params, trial)

    else:
        raise ValueError(f"unknown design {config.design!r}")

    def safe_trial(trial: int) -> tuple[list[TrialRecord], list[TrialError]]:
        try:
            return one_trial(trial), []
        except BatchPIError as exc:
            return [], [
                TrialError(trial=trial, method="*", message=str(exc))
            ]

    workers = int(os.environ.get(THREADS_ENV_VAR, "1"))
    trial_ids = range(1, config.trials + 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(safe_trial, trial_ids))
    else:
        outcomes = [safe_trial(t) for t in trial_ids]

    records: list[TrialRecord] = []
    errors: list[TrialError] = []
    for recs, errs in outcomes:
        records.extend(recs)
        errors.extend(errs)

    summaries = []
    for method in config.methods:
        rows = [r for r in records if r.method == method]
        mean_cov, cov_se = _mean_and_se([r.coverage_rate for r in rows])
        prob, prob_se = _mean_and_se([1.0 if r.covered else 0.0 for r in rows])
        mean_w, w_se = _mean_and_se([r.width for r in rows])
        mean_acc, _ = _mean_and_se([float(r.n_accepted) for r in rows])
        summaries.append(
            MethodSummary(
                method=method,
                trials=len(rows),
                mean_coverage=mean_cov,
                coverage_se=cov_se,
                prob_target=prob,
                prob_target_se=prob_se,
                mean_width=mean_w,
                width_se=w_se,
                mean_n_accepted=mean_acc,
            )
        )
    return CoverageReport(
        config=config,
        records=tuple(records),
        errors=tuple(errors),
        summaries=tuple(summaries),
    )
