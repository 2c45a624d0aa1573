"""Adaptive look-back window selection for online risk forecasting.

Selects, at every time step, the longest stretch of recent history that is
statistically indistinguishable from the present, then fits the forecast
on it.  Thresholds for the stability tests are calibrated by bootstrap
(iid or moving-block); deterministic threshold families, fixed rolling
windows, and the full-history forecaster ship as baselines, together with
simulation scenarios, evaluation metrics, and a batch CLI.
"""

from .baselines import (
    SAWSConfig,
    full_window_forecast,
    rolling_forecast,
    saws_select,
    saws_threshold,
)
from .bootstrap import (
    BootstrapConfig,
    ThresholdValue,
    block_length,
    block_resample,
    bootstrap_gaps,
    bootstrap_threshold,
    empirical_quantile,
    iid_resample,
)
from .estimators import FitResult, fit_mean, fit_target, fit_var, fit_var_es, tail_es_given_v
from .metrics import (
    ExperimentTensor,
    GaussianTruth,
    SkewedTTruth,
    cumulative_loss,
    cumulative_risk_mean,
    cumulative_risk_var,
    mab,
    mean_variance,
    mse,
)
from .pipeline import (
    BacktestConfig,
    ConfigError,
    DataError,
    ForecastRecord,
    LossSeries,
    MetricsReport,
    emit_results,
    load_price_csv,
    run_backtest,
    run_experiment,
)
from .scenarios import (
    ScenarioPath,
    gen_garch,
    gen_setting_a,
    gen_setting_b,
    generate,
    skewed_t_quantile,
    skewed_t_sample,
)
from .scoring import (
    Mean,
    VaR,
    VaRES,
    empirical_score,
    joint_vares_score,
    pinball_score,
    pointwise_score,
    squared_loss,
)
from .selection import (
    CallableThreshold,
    CandidateGridConfig,
    FixedThreshold,
    SelectionTrace,
    bonferroni_level,
    candidate_windows,
    pairwise_test,
    rejection_probability_gaussian,
    select_window,
)

__version__ = "0.1.0"

__all__ = [
    "BacktestConfig",
    "BootstrapConfig",
    "CallableThreshold",
    "CandidateGridConfig",
    "ConfigError",
    "DataError",
    "ExperimentTensor",
    "FitResult",
    "FixedThreshold",
    "ForecastRecord",
    "GaussianTruth",
    "LossSeries",
    "Mean",
    "MetricsReport",
    "SAWSConfig",
    "ScenarioPath",
    "SelectionTrace",
    "SkewedTTruth",
    "ThresholdValue",
    "VaR",
    "VaRES",
    "block_length",
    "block_resample",
    "bonferroni_level",
    "bootstrap_gaps",
    "bootstrap_threshold",
    "candidate_windows",
    "cumulative_loss",
    "cumulative_risk_mean",
    "cumulative_risk_var",
    "empirical_quantile",
    "empirical_score",
    "emit_results",
    "fit_mean",
    "fit_target",
    "fit_var",
    "fit_var_es",
    "full_window_forecast",
    "gen_garch",
    "gen_setting_a",
    "gen_setting_b",
    "generate",
    "iid_resample",
    "joint_vares_score",
    "load_price_csv",
    "mab",
    "mean_variance",
    "mse",
    "pairwise_test",
    "pinball_score",
    "pointwise_score",
    "rejection_probability_gaussian",
    "rolling_forecast",
    "run_backtest",
    "run_experiment",
    "saws_select",
    "saws_threshold",
    "select_window",
    "skewed_t_quantile",
    "skewed_t_sample",
    "squared_loss",
    "tail_es_given_v",
]
