"""Weighted Kolmogorov metric toolkit for heavy-tailed model validation.

The metric d_{K,h,q}(F, G) = sup_t (1 + h(t))**(-q) |F(t) - G(t)| keeps
uniform control near the center of the distribution while downweighting
the far tails, restoring the parametric n^(-1/2) convergence rate that
classical Kolmogorov–Smirnov loses under heavy tails.  The package
computes the metric (one-sample, two-sample, multivariate), the
truncation analytics behind its rate guarantees, a production validation
pipeline (bootstrap critical values, Kupiec tail backtest, grid-robust
hybrid verdict), and a reproducible Monte Carlo harness.
"""

from .distributions import (
    Gaussian,
    MomentSummary,
    Pareto,
    StudentT,
    TailIndexInfo,
    analytic_moments,
    model_from_json,
    model_to_json,
    sample,
    tail_index_info,
)
from .errors import (
    BudgetExceededError,
    ComparabilityError,
    InvalidConfigError,
    NumericalError,
)
from .exhaustion import (
    ExhaustionSpec,
    WeightConfig,
    absolute,
    centered,
    custom,
    min_weight_on_window,
    var_centered,
    weight,
    weight_config_from_json,
    weight_config_to_json,
    weight_ratio_bounds,
)
from .experiments import (
    ConvergenceRow,
    ScenarioConfig,
    fit_scenario_slopes,
    loglog_slope,
    rows_from_csv,
    rows_to_csv,
    run_convergence,
    run_tailscan,
)
from .metric import (
    EmpiricalCDF,
    NormalizedSumSample,
    WeightedDistanceResult,
    simulate_normalized_sums,
    weighted_distance_multivariate,
    weighted_distance_to_model,
    weighted_distance_two_sample,
)
from .theory import (
    BoundConstants,
    BoundTerms,
    RatePlan,
    TruncationAnalysis,
    evaluate_tradeoff_bound,
    minimize_bound_over_R,
    select_rate_parameters,
    truncation_analysis,
)
from .validation import (
    BootstrapOutcome,
    GridRobustResult,
    ValidationPolicy,
    ValidationVerdict,
    bootstrap_null,
    critical_value,
    grid_robust_distance,
    hybrid_validate,
    kupiec_pof,
    p_value,
)

__version__ = "0.1.0"
