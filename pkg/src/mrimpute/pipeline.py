"""End-to-end estimation on one sample: fit, impute, total, conditional bias."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .condbias import CondBiasEstimate, LinearizedPsi, est_cond_bias_mr, linearized_psi, robust_mr_total
from .design import FixedSizeDesign, SrsworDesign
from .impute import ImputationResult, run_imputation
from .models import FittedModelSuite, SuiteSpec, fit_suite


@dataclass(frozen=True)
class SurveyData:
    """Sample-level data: ``y`` (NaN allowed where ``r == 0``), response
    indicators, named covariates and the design that produced the sample."""

    y: np.ndarray
    r: np.ndarray
    covariates: Mapping[str, np.ndarray]
    design: FixedSizeDesign
    weights: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))
        object.__setattr__(self, "r", np.asarray(self.r).astype(np.int8))
        object.__setattr__(self, "covariates", {k: np.asarray(v, dtype=float) for k, v in self.covariates.items()})
        if self.weights is None:
            ids = np.arange(len(self.y))
            object.__setattr__(self, "weights", 1.0 / self.design.pi(ids))
        else:
            object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        if np.isnan(self.y[self.r == 1]).any():
            raise ValueError("respondents must have an observed y")

    @property
    def n(self) -> int:
        return len(self.y)

    def subset(self, idx: np.ndarray, design: FixedSizeDesign) -> "SurveyData":
        return SurveyData(self.y[idx], self.r[idx], {k: v[idx] for k, v in self.covariates.items()}, design)


@dataclass
class Estimate:
    t_mr: float
    t_robust: float
    imputation: ImputationResult | None
    suite: FittedModelSuite | None
    psi: LinearizedPsi
    cond_bias: CondBiasEstimate

    @property
    def n_clamped(self) -> int:
        return 0 if self.suite is None else self.suite.n_clamped


def fit_and_impute(data: SurveyData, spec: SuiteSpec, weights=None):
    """Fit the working models and impute; returns ``(suite, imputation)``.

    Both are ``None`` when every sampled unit responded.
    """
    w = data.weights if weights is None else np.asarray(weights, dtype=float)
    if data.r.min() == 1:
        return None, None
    suite = fit_suite(spec, data.covariates, data.y, data.r, w)
    return suite, run_imputation(suite, data.y, data.r, w)


def mr_estimate(data: SurveyData, spec: SuiteSpec, weights=None) -> float:
    """Imputed total only (no linearization); the bootstrap's inner estimator."""
    w = data.weights if weights is None else np.asarray(weights, dtype=float)
    suite, imp = fit_and_impute(data, spec, w)
    if imp is None:
        return float(w @ data.y)
    return imp.total


def estimate(data: SurveyData, spec: SuiteSpec) -> Estimate:
    w = data.weights
    suite, imp = fit_and_impute(data, spec)
    if imp is None:
        t_mr = float(w @ data.y)
        psi = LinearizedPsi(data.y.copy(), data.y.copy())
    else:
        t_mr = imp.total
        psi = linearized_psi(suite, imp, data.y, data.r, w)
    cb = est_cond_bias_mr(data.design, psi.psi)
    return Estimate(t_mr, robust_mr_total(t_mr, cb), imp, suite, psi, cb)


def srswor_data(y, r, covariates, N: int) -> SurveyData:
    return SurveyData(y, r, covariates, SrsworDesign(N, len(y)))
