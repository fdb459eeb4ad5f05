"""Penalized robust approximated quadratic M-estimation for sparse mean
regression with heavy-tailed, heteroscedastic or contaminated data."""

__version__ = "0.1.0"

from ._backend import BACKEND_NAME as backend_name
from .losses import (
    Dataset,
    LossSpec,
    WeightSpec,
    empirical_gradient,
    empirical_loss,
    loss_deriv,
    loss_second_deriv,
    loss_value,
    weight_eval,
)
from .penalties import (
    PenaltySpec,
    amenability,
    penalty_deriv,
    penalty_scalar,
    penalty_vector,
    q_value_and_grad,
)
from .solver import (
    DivergenceError,
    FitResult,
    SolverConfig,
    composite_gd,
    constrained_prox,
    kkt_residual,
    plugin_variance,
    rsc_probe,
    soft_threshold,
    two_step_fit,
)
from .tuning import CVResult, TuningGrid, cross_validate, default_grid, trimmed_mspe
from .simulation import (
    EstimatorSpec,
    SelectionMetrics,
    SimScenario,
    StudySummary,
    gen_dataset,
    gen_design,
    gen_errors,
    parse_estimator,
    run_study,
    selection_metrics,
)
from .dataio import load_csv, predict, prescreen, rpe_eval, save_csv

__all__ = [
    "Dataset", "LossSpec", "WeightSpec", "PenaltySpec", "SolverConfig",
    "FitResult", "TuningGrid", "CVResult", "SimScenario", "EstimatorSpec",
    "SelectionMetrics", "StudySummary", "DivergenceError",
    "loss_value", "loss_deriv", "loss_second_deriv", "weight_eval",
    "empirical_loss", "empirical_gradient",
    "penalty_scalar", "penalty_deriv", "penalty_vector", "q_value_and_grad",
    "amenability",
    "soft_threshold", "constrained_prox", "composite_gd", "two_step_fit",
    "kkt_residual", "plugin_variance", "rsc_probe",
    "default_grid", "trimmed_mspe", "cross_validate",
    "gen_errors", "gen_design", "gen_dataset", "selection_metrics", "run_study",
    "parse_estimator",
    "load_csv", "save_csv", "prescreen", "predict", "rpe_eval",
    "backend_name",
]
