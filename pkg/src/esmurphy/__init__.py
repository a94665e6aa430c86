"""Comparative evaluation of joint (VaR, ES) forecasts.

Elementary consistent scores and their mixtures, Murphy diagrams, a
permutation test of forecast dominance with a step-down multiplicity
adjustment, reference volatility models with rolling out-of-sample
evaluation, a Monte Carlo harness for the test's size and power, and a
put-option pricing cross-check.
"""

__version__ = "0.1.0"

from .dominance import (
    DominanceTestConfig,
    DominanceTestResult,
    ScoreDiffPanel,
    compute_diff_panel,
    dominance_test,
    pointwise_p_values,
    sign_permutation,
    westfall_young_adjust,
)
from .models import (
    FitConvergenceError,
    MarketData,
    RollingConfig,
    VolatilityModelParams,
    evaluation_summary,
    fit_qml,
    hs_forecast,
    load_market_csv,
    log_returns,
    refit_schedule,
    rolling_evaluation,
    scaled_t_var_es,
    student_t_es,
    student_t_quantile,
)
from .murphy import (
    DiffCurve,
    EvaluationSeries,
    MurphyCurve,
    emit_curve_data,
    murphy_curve,
    murphy_diff,
    score_panel,
)
from .options import (
    DiscreteDistribution,
    LognormalDistribution,
    OptionScenario,
    PricingCheck,
    black_scholes_put_zero_rate,
    es_put_price,
    expected_profit,
    lognormal_var_es,
    verify_pricing_equivalence,
)
from .scores import (
    DEFAULT_ALPHA,
    DiscreteMixture,
    FzSpec,
    JointForecast,
    ScoreFamily,
    ThresholdGrid,
    build_threshold_grid,
    elementary_score_es,
    elementary_score_var,
    elementary_scores_es,
    elementary_scores_var,
    fz_score,
    mixture_score,
    tail_limit_score,
)
from .simulation import (
    DgpConfig,
    ForecasterSpec,
    StudyRow,
    make_forecaster,
    simulate_dgp,
    size_power_study,
    study_rows_to_csv,
)
from .variance import VarianceEstimator, newey_west_variance

__all__ = [
    "__version__",
    "DEFAULT_ALPHA",
    # scores
    "JointForecast",
    "ScoreFamily",
    "ThresholdGrid",
    "FzSpec",
    "DiscreteMixture",
    "elementary_score_var",
    "elementary_score_es",
    "elementary_scores_var",
    "elementary_scores_es",
    "tail_limit_score",
    "fz_score",
    "mixture_score",
    "build_threshold_grid",
    # murphy
    "EvaluationSeries",
    "MurphyCurve",
    "DiffCurve",
    "murphy_curve",
    "murphy_diff",
    "score_panel",
    "emit_curve_data",
    # dominance
    "VarianceEstimator",
    "newey_west_variance",
    "DominanceTestConfig",
    "DominanceTestResult",
    "ScoreDiffPanel",
    "compute_diff_panel",
    "pointwise_p_values",
    "sign_permutation",
    "westfall_young_adjust",
    "dominance_test",
    # models
    "VolatilityModelParams",
    "MarketData",
    "RollingConfig",
    "FitConvergenceError",
    "load_market_csv",
    "log_returns",
    "student_t_quantile",
    "student_t_es",
    "scaled_t_var_es",
    "fit_qml",
    "hs_forecast",
    "refit_schedule",
    "rolling_evaluation",
    "evaluation_summary",
    # simulation
    "DgpConfig",
    "ForecasterSpec",
    "StudyRow",
    "simulate_dgp",
    "make_forecaster",
    "size_power_study",
    "study_rows_to_csv",
    # options
    "DiscreteDistribution",
    "LognormalDistribution",
    "OptionScenario",
    "PricingCheck",
    "es_put_price",
    "lognormal_var_es",
    "black_scholes_put_zero_rate",
    "verify_pricing_equivalence",
    "expected_profit",
]
