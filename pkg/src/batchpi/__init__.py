"""Distribution-free prediction intervals for batch targets.

Given calibration scores and a batch of m unobserved test scores that are
exchangeable with them, this package computes prediction intervals for
monotone functions of the test batch (mean, order statistics, several
quantiles at once), PAC-style prediction sets, selection rules with
k-familywise error control, and counterfactual and covariate-shift
variants, together with comparison baselines and a Monte Carlo harness.
"""

__version__ = "0.1.0"

from .applications import (
    MEAN,
    MEDIAN,
    MeanTarget,
    MedianTarget,
    PacRank,
    QuantilesTarget,
    SelectionResult,
    counterfactual_interval,
    pac_rank,
    select,
    selection_threshold,
    tanh_bounded_outcomes,
)
from .baselines import (
    JIN_CANDES,
    JIN_REN,
    GroupedScores,
    bonferroni_baseline,
    concentration_mean_interval,
    extended_split_conformal,
    group_scores,
    kfwer_pvalue_selection,
    markov_pac_rank,
    partition_baseline,
)
from .combinatorics import (
    ADDITION_STEP,
    CompositionalRankStep,
    box_count,
    compositional_level_count,
    level_set_count,
    multiset_coeff,
    partition_count,
    quantile_rank_pmf,
    rank_simplex_size,
    validate_step,
)
from .core import (
    CalibrationScores,
    DiscreteDist,
    Levels,
    PredictionInterval,
    as_fraction,
    make_discrete_dist,
    order_statistics,
    quantile_lower,
    quantile_upper_tail,
    uniform_dist,
)
from .covshift import (
    PropensityModel,
    acceptance_probability,
    batch_pi_covshift,
    rejection_sample,
    weighted_conformal_extended,
)
from .engine import (
    EXACT,
    BatchScoreFn,
    ExactMode,
    RankOrderFn,
    SampledMode,
    batch_mean,
    batch_order_stat,
    batch_pi,
    batch_pi_one_sided,
    batch_sum,
    dp_max_compositional,
    dp_max_sum,
    endpoint_lower,
    endpoint_upper,
    oracle_batch_pi,
    rank_order_from_h,
    rank_order_from_split,
    rank_quantiles,
)
from .errors import BatchPIError
from .harness import (
    CoverageReport,
    SimConfig,
    fit_logistic_propensity,
    fit_simple_regressor,
    gen_counterfactual_data,
    gen_regression_data,
    gen_softplus_data,
    run_coverage_experiment,
    true_propensity_model,
)
from .quantiles import (
    MultiQuantileBounds,
    QuantileTarget,
    coverage_upper_epsilon,
    multi_quantile_bounds,
    quantile_interval,
    quartile_bounds,
    sparse_batch_pi,
)

__all__ = [
    "ADDITION_STEP",
    "BatchPIError",
    "BatchScoreFn",
    "CalibrationScores",
    "CompositionalRankStep",
    "CoverageReport",
    "DiscreteDist",
    "EXACT",
    "ExactMode",
    "GroupedScores",
    "JIN_CANDES",
    "JIN_REN",
    "Levels",
    "MEAN",
    "MEDIAN",
    "MeanTarget",
    "MedianTarget",
    "MultiQuantileBounds",
    "PacRank",
    "PredictionInterval",
    "PropensityModel",
    "QuantileTarget",
    "QuantilesTarget",
    "RankOrderFn",
    "SampledMode",
    "SelectionResult",
    "SimConfig",
    "acceptance_probability",
    "as_fraction",
    "batch_mean",
    "batch_order_stat",
    "batch_pi",
    "batch_pi_covshift",
    "batch_pi_one_sided",
    "batch_sum",
    "bonferroni_baseline",
    "box_count",
    "compositional_level_count",
    "concentration_mean_interval",
    "counterfactual_interval",
    "coverage_upper_epsilon",
    "dp_max_compositional",
    "dp_max_sum",
    "endpoint_lower",
    "endpoint_upper",
    "extended_split_conformal",
    "fit_logistic_propensity",
    "fit_simple_regressor",
    "gen_counterfactual_data",
    "gen_regression_data",
    "gen_softplus_data",
    "group_scores",
    "kfwer_pvalue_selection",
    "level_set_count",
    "make_discrete_dist",
    "markov_pac_rank",
    "multi_quantile_bounds",
    "multiset_coeff",
    "oracle_batch_pi",
    "order_statistics",
    "pac_rank",
    "partition_baseline",
    "partition_count",
    "quantile_interval",
    "quantile_lower",
    "quantile_rank_pmf",
    "quantile_upper_tail",
    "quartile_bounds",
    "rank_order_from_h",
    "rank_order_from_split",
    "rank_quantiles",
    "rank_simplex_size",
    "rejection_sample",
    "run_coverage_experiment",
    "select",
    "selection_threshold",
    "sparse_batch_pi",
    "tanh_bounded_outcomes",
    "true_propensity_model",
    "uniform_dist",
    "validate_step",
    "weighted_conformal_extended",
]
