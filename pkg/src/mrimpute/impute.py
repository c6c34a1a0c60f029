"""Multiply robust imputed values and the imputed total."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularSystemError
from .models import FittedModelSuite, check_rank, solve_spd


def regression_factor(p_hat: np.ndarray | None, n: int) -> np.ndarray:
    """Per-unit factor ``1/p_hat - 1`` of the imputation regression weights.

    Without a nonresponse model the factor is a constant; any positive constant
    gives the same coefficients, so 1 is used.
    """
    if p_hat is None:
        return np.ones(n)
    return 1.0 / p_hat - 1.0


def compute_tau(y, r, w, m_hat, p_hat=None) -> np.ndarray:
    """Coefficients of the respondent regression of ``y`` on ``h = (1, m_hat)``
    with weights ``w (1/p_hat - 1)``."""
    r = np.asarray(r).astype(bool)
    w = np.asarray(w, dtype=float)
    if r.sum() < 2:
        raise SingularSystemError("fewer than two respondents", block="tau normal equations")
    rho = regression_factor(p_hat, len(w))
    H = np.column_stack([np.ones(r.sum()), np.asarray(m_hat)[r]])
    wt = (w * rho)[r]
    if np.any(wt <= 0):
        raise SingularSystemError("non-positive regression weight", block="tau normal equations")
    check_rank(H * np.sqrt(wt)[:, None], "tau normal equations")
    yr = np.asarray(y, dtype=float)[r]
    return solve_spd((H * wt[:, None]).T @ H, H.T @ (wt * yr), "tau normal equations")


def impute(tau: np.ndarray, m_hat: np.ndarray, r) -> np.ndarray:
    """Imputed values ``tau_0 + tau_1 m_hat`` for the nonrespondents, in sample order."""
    nr = ~np.asarray(r).astype(bool)
    return tau[0] + tau[1] * np.asarray(m_hat)[nr]


def mr_total(w, y, r, y_star) -> float:
    """Observed values of respondents plus imputed values of nonrespondents, weighted."""
    r = np.asarray(r).astype(bool)
    w = np.asarray(w, dtype=float)
    return float(w[r] @ np.asarray(y, dtype=float)[r] + w[~r] @ np.asarray(y_star, dtype=float))


@dataclass(frozen=True)
class ImputationResult:
    tau: np.ndarray
    h: np.ndarray  # (n, 2) columns (1, m_hat)
    y_star: np.ndarray  # nonrespondents only, sample order
    total: float

    def completed(self, y, r) -> np.ndarray:
        """Sample values with nonrespondents replaced by their imputed values."""
        out = np.array(y, dtype=float, copy=True)
        out[~np.asarray(r).astype(bool)] = self.y_star
        return out


def run_imputation(suite: FittedModelSuite, y, r, w) -> ImputationResult:
    m_hat = suite.m_hat
    tau = compute_tau(y, r, w, m_hat, suite.p_hat)
    y_star = impute(tau, m_hat, r)
    h = np.column_stack([np.ones_like(m_hat), m_hat])
    return ImputationResult(tau, h, y_star, mr_total(w, y, r, y_star))
