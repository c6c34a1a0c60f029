"""Calibrated imputation: adjust preliminary imputed values as little as
possible so that the imputed total hits a target exactly.

The objective is ``sum_i q_i^-1 y*_i G(y_F,i / y*_i)`` over nonrespondents,
which for ``G(u) = (u - 1)^2 / 2`` is half the generalized chi-square distance
``sum q^-1 (y_F - y*)^2 / y*``.  Stationarity gives
``y_F,i = y*_i g^-1(lambda q_i w_i)`` with ``g = G'``; ``lambda`` solves the
single constraint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CalibrationError, InfeasibleCalibrationError

MAX_ITER = 100
REL_TOL = 1e-12


@dataclass(frozen=True)
class CalibrationProblem:
    """Nonrespondent arrays (``y_star``, ``w``, ``q``), the respondent part of
    the total, and the target total."""

    y_star: np.ndarray
    w: np.ndarray
    target: float
    respondent_total: float = 0.0
    q: np.ndarray | None = None

    def __post_init__(self):
        ys = np.asarray(self.y_star, dtype=float)
        object.__setattr__(self, "y_star", ys)
        object.__setattr__(self, "w", np.asarray(self.w, dtype=float))
        q = np.ones_like(ys) if self.q is None else np.asarray(self.q, dtype=float)
        if np.any(q <= 0):
            raise CalibrationError("q coefficients must be positive")
        object.__setattr__(self, "q", q)

    @property
    def adjustment(self) -> float:
        """Required change of the nonrespondent part of the total."""
        return self.target - self.respondent_total - float(self.w @ self.y_star)

    def achieved(self, y_final) -> float:
        return self.respondent_total + float(self.w @ np.asarray(y_final))

    @classmethod
    def from_sample(cls, y, r, w, y_star, target, q=None) -> "CalibrationProblem":
        """Build from full-sample arrays; ``y_star`` and ``q`` are per nonrespondent."""
        r = np.asarray(r).astype(bool)
        w = np.asarray(w, dtype=float)
        resp = float(w[r] @ np.asarray(y, dtype=float)[r])
        return cls(np.asarray(y_star, dtype=float), w[~r], target, resp, q)


class ChiSquare:
    """``G(u) = (u - 1)^2 / 2``; unbounded ratios."""

    bounds = (-math.inf, math.inf)

    def G(self, u):
        return 0.5 * (u - 1.0) ** 2

    def g_inv(self, x):
        return 1.0 + x

    def g_inv_prime(self, x):
        return np.ones_like(x)


class LogitDistance:
    """Bounded (logit) distance with ratios constrained to ``(lower, upper)``,
    ``lower < 1 < upper``."""

    def __init__(self, lower: float = 0.5, upper: float = 2.0):
        if not lower < 1.0 < upper:
            raise ValueError("need lower < 1 < upper")
        self.bounds = (lower, upper)
        self.A = (upper - lower) / ((1.0 - lower) * (upper - 1.0))

    def G(self, u):
        L, U = self.bounds
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            a = np.where(u > L, (u - L) * np.log((u - L) / (1.0 - L)), 0.0)
            b = np.where(u < U, (U - u) * np.log((U - u) / (U - 1.0)), 0.0)
        return (a + b) / self.A

    def g_inv(self, x):
        L, U = self.bounds
        e = np.exp(np.clip(self.A * x, -700, 700))
        return (L * (U - 1.0) + U * (1.0 - L) * e) / ((U - 1.0) + (1.0 - L) * e)

    def g_inv_prime(self, x):
        L, U = self.bounds
        e = np.exp(np.clip(self.A * x, -700, 700))
        den = (U - 1.0) + (1.0 - L) * e
        return self.A * (U - L) * (U - 1.0) * (1.0 - L) * e / den ** 2


def _check_positive(problem: CalibrationProblem) -> None:
    if np.any(problem.y_star <= 0):
        raise CalibrationError("preliminary imputed values must be positive for this distance")


def calibrate_chi_square(problem: CalibrationProblem) -> np.ndarray:
    """Closed form ``y_F = y* (1 + q w D / sum w^2 q y*)`` with ``D`` the required adjustment."""
    d = problem.adjustment
    if problem.y_star.size == 0:
        if abs(d) > REL_TOL * (1.0 + abs(problem.target)):
            raise InfeasibleCalibrationError("no nonrespondents to carry a nonzero adjustment", (0.0, 0.0))
        return problem.y_star.copy()
    _check_positive(problem)
    denom = float(np.sum(problem.w ** 2 * problem.q * problem.y_star))
    if denom == 0.0:
        raise CalibrationError("zero denominator sum(w^2 q y*)")
    return problem.y_star * (1.0 + problem.q * problem.w * d / denom)


def calibrate_general(problem: CalibrationProblem, distance=None, tol: float = REL_TOL,
                      max_iter: int = MAX_ITER) -> np.ndarray:
    """Solve ``sum w y* g^-1(lambda q w) = target - respondent_total`` for ``lambda``
    by Newton steps safeguarded with bisection."""
    distance = ChiSquare() if distance is None else distance
    ys, w, q = problem.y_star, problem.w, problem.q
    goal = problem.target - problem.respondent_total
    scale = tol * (1.0 + abs(problem.target))
    if ys.size == 0:
        if abs(goal) > scale:
            raise InfeasibleCalibrationError("no nonrespondents to carry a nonzero adjustment", (0.0, 0.0))
        return ys.copy()
    _check_positive(problem)
    L, U = distance.bounds
    base = float(w @ ys)
    lo_att, hi_att = L * base, U * base
    if not lo_att < goal < hi_att:
        raise InfeasibleCalibrationError("target outside the attainable range",
                                         (problem.respondent_total + lo_att, problem.respondent_total + hi_att))
    a = q * w

    def f(lam):
        return float(w @ (ys * distance.g_inv(lam * a))) - goal

    def fprime(lam):
        return float(w @ (ys * a * distance.g_inv_prime(lam * a)))

    lam = 0.0
    val = f(lam)
    if abs(val) <= scale:
        return ys.copy()
    # Bracket the root; f is increasing in lambda.
    lo, hi = (lam, None) if val < 0 else (None, lam)
    step = 1.0 / max(np.abs(a).max(), 1e-300)
    probe = lam
    while lo is None or hi is None:
        probe = probe + step if val < 0 else probe - step
        fv = f(probe)
        if fv < 0:
            lo = probe
        else:
            hi = probe
        step *= 2.0
        if not math.isfinite(step):
            raise CalibrationError("could not bracket the calibration multiplier")
    for _ in range(max_iter):
        fv = f(lam)
        if abs(fv) <= scale:
            return ys * distance.g_inv(lam * a)
        if fv < 0:
            lo = max(lo, lam)
        else:
            hi = min(hi, lam)
        d = fprime(lam)
        cand = lam - fv / d if d > 0 else math.nan
        if not (lo < cand < hi):
            cand = 0.5 * (lo + hi)
        lam = cand
    fv = f(lam)
    if abs(fv) <= scale:
        return ys * distance.g_inv(lam * a)
    raise CalibrationError(f"calibration solver did not converge in {max_iter} iterations")


def chi_square_objective(y_final, problem: CalibrationProblem) -> float:
    return float(np.sum((np.asarray(y_final) - problem.y_star) ** 2 / (problem.q * problem.y_star)))
