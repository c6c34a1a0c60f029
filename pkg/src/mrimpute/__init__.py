"""Multiply robust imputation of survey totals with conditional-bias
robustification, a pseudo-population bootstrap, calibrated imputation and a
Monte Carlo harness."""

from .bootstrap import bootstrap_cond_bias, build_pseudo_population
from .calibrate import (
    CalibrationProblem,
    ChiSquare,
    LogitDistance,
    calibrate_chi_square,
    calibrate_general,
)
from .condbias import est_cond_bias_mr, linearized_psi, robust_mr_total, single_model_psi
from .design import (
    FinitePopulation,
    Sample,
    SrsworDesign,
    cond_bias_ht_population,
    draw_srswor,
    est_cond_bias_ht,
    ht_total,
    robust_ht,
    srswor_cond_bias_closed_form,
)
from .errors import (
    ConfigError,
    InputError,
    MRImputeError,
    NonConvergenceError,
    NumericalError,
    SingularSystemError,
)
from .harness import ModelEntry, RunResult, ScenarioConfig, metrics, run_scenario
from .models import ImputationModelSpec, NonresponseModelSpec, SuiteSpec, fit_suite
from .pipeline import Estimate, SurveyData, estimate, mr_estimate
from .simgen import PopulationSpec, gen_population, gen_response

__version__ = "0.1.0"

__all__ = [
    "CalibrationProblem", "ChiSquare", "ConfigError", "Estimate", "FinitePopulation",
    "ImputationModelSpec", "InputError", "LogitDistance", "MRImputeError", "ModelEntry",
    "NonConvergenceError", "NonresponseModelSpec", "NumericalError", "PopulationSpec",
    "RunResult", "Sample", "ScenarioConfig", "SingularSystemError", "SrsworDesign", "SuiteSpec",
    "SurveyData", "bootstrap_cond_bias", "build_pseudo_population", "calibrate_chi_square",
    "calibrate_general", "cond_bias_ht_population", "draw_srswor", "est_cond_bias_ht",
    "est_cond_bias_mr", "estimate", "fit_suite", "gen_population", "gen_response", "ht_total",
    "linearized_psi", "metrics", "mr_estimate", "robust_ht", "robust_mr_total", "run_scenario",
    "single_model_psi", "srswor_cond_bias_closed_form",
]
