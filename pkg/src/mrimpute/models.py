"""Working models: logistic nonresponse models, linear imputation models and
the compression of several fitted models into one score each.

Predictor sets are written as lists of terms: ``"1"`` is the intercept, a bare
name such as ``"v1"`` is a covariate column and ``"v1^2"`` raises it to an
integer power.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Literal, Mapping, Sequence

import numpy as np
from scipy import linalg

from .errors import (
    ConfigError,
    DegenerateCompressionError,
    NonConvergenceError,
    SingularSystemError,
)

PIVOT_RTOL = 1e-12
SCORE_TOL = 1e-10
MAX_NEWTON_ITER = 50
# |alpha|_inf beyond this means fitted probabilities within ~1e-22 of 0 or 1.
MAX_LOGIT_COEF = 50.0
P_CLAMP = (0.005, 0.995)

_TERM = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:\^\s*(\d+))?\s*$")

Phi = Literal["w", "1"]


def parse_term(term: str) -> tuple[str | None, int]:
    """``(covariate, power)``; the intercept is ``(None, 0)``."""
    t = str(term).strip()
    if t == "1":
        return None, 0
    m = _TERM.match(t)
    if m is None:
        raise ConfigError(f"cannot parse predictor term {term!r}")
    return m.group(1), int(m.group(2) or 1)


def design_matrix(terms: Sequence[str], covariates: Mapping[str, np.ndarray], n: int | None = None) -> np.ndarray:
    """Build the column matrix for ``terms`` from named covariate arrays."""
    if n is None:
        n = len(next(iter(covariates.values())))
    cols = []
    for term in terms:
        name, power = parse_term(term)
        if name is None:
            cols.append(np.ones(n))
            continue
        if name not in covariates:
            raise ConfigError(f"unknown covariate {name!r} in term {term!r}")
        col = np.asarray(covariates[name], dtype=float)
        cols.append(col if power == 1 else col ** power)
    if not cols:
        raise ConfigError("a model needs at least one predictor term")
    return np.column_stack(cols)


def check_rank(X: np.ndarray, block: str) -> None:
    """Raise :class:`SingularSystemError` unless ``X`` has full column rank.

    Uses a column-pivoted QR with relative pivot tolerance ``PIVOT_RTOL``.
    """
    if X.shape[0] < X.shape[1]:
        raise SingularSystemError(f"{X.shape[0]} rows for {X.shape[1]} columns", block=block)
    r = linalg.qr(X, mode="r", pivoting=True)[0]
    d = np.abs(np.diag(r))
    if d.size == 0 or d[0] == 0 or d[-1] <= PIVOT_RTOL * d[0]:
        raise SingularSystemError("design matrix is rank deficient", block=block)


def solve_spd(A: np.ndarray, b: np.ndarray, block: str) -> np.ndarray:
    """Solve ``A x = b`` for a symmetric matrix, raising a named error when singular."""
    try:
        cho = linalg.cho_factor(A, check_finite=False)
        x = linalg.cho_solve(cho, b, check_finite=False)
    except linalg.LinAlgError:
        try:
            x = linalg.solve(A, b, check_finite=False)
        except linalg.LinAlgError as exc:
            raise SingularSystemError(str(exc), block=block) from None
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("non-finite solution", block=block)
    return x


def expit(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass(frozen=True)
class NonresponseModelSpec:
    terms: tuple[str, ...]
    phi: Phi = "w"
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.phi not in ("w", "1"):
            raise ConfigError(f"phi must be 'w' or '1', got {self.phi!r}")


@dataclass(frozen=True)
class ImputationModelSpec:
    terms: tuple[str, ...]
    phi: Phi = "w"
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.phi not in ("w", "1"):
            raise ConfigError(f"phi must be 'w' or '1', got {self.phi!r}")


@dataclass(frozen=True)
class SuiteSpec:
    """J nonresponse models and L >= 1 imputation models."""

    nonresponse: tuple[NonresponseModelSpec, ...] = ()
    imputation: tuple[ImputationModelSpec, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "nonresponse", tuple(self.nonresponse))
        object.__setattr__(self, "imputation", tuple(self.imputation))
        if len(self.imputation) < 1:
            raise ConfigError("at least one imputation model is required")

    @property
    def J(self) -> int:
        return len(self.nonresponse)

    @property
    def L(self) -> int:
        return len(self.imputation)

    @classmethod
    def from_terms(cls, nonresponse=(), imputation=(), phi: Phi = "w") -> "SuiteSpec":
        return cls(
            tuple(NonresponseModelSpec(tuple(t), phi) for t in nonresponse),
            tuple(ImputationModelSpec(tuple(t), phi) for t in imputation),
        )


@dataclass
class LogisticFit:
    coef: np.ndarray
    iterations: int
    score_norm: float
    trace: list = field(default_factory=list)


def _phi_weights(phi: Phi, w: np.ndarray) -> np.ndarray:
    return w if phi == "w" else np.ones_like(w)


def fit_logistic(X: np.ndarray, r: np.ndarray, phi: np.ndarray, tol: float = SCORE_TOL,
                 max_iter: int = MAX_NEWTON_ITER) -> LogisticFit:
    """Solve ``sum phi_i (r_i - p_i) x_i = 0`` by damped Newton-Raphson.

    With the logistic link the estimating function
    ``phi (r - p) / (p (1 - p)) * dp/dalpha`` reduces to ``phi (r - p) x``.
    Steps are halved while the score max-norm fails to decrease.
    """
    r = np.asarray(r, dtype=float)
    if r.min() == r.max():
        raise NonConvergenceError("response indicators are all equal: complete separation")
    check_rank(X, "nonresponse design matrix")
    scale = 1.0 + np.abs(phi @ X).max()
    alpha = np.zeros(X.shape[1])
    p = expit(X @ alpha)
    score = X.T @ (phi * (r - p))
    norm = np.abs(score).max()
    trace = [(0, norm, 0.0)]
    for it in range(1, max_iter + 1):
        if norm <= tol * scale:
            return LogisticFit(alpha, it - 1, norm, trace)
        info = (X * (phi * p * (1 - p))[:, None]).T @ X
        step = solve_spd(info, score, "logistic information matrix")
        t = 1.0
        while True:
            cand = alpha + t * step
            p_c = expit(X @ cand)
            score_c = X.T @ (phi * (r - p_c))
            norm_c = np.abs(score_c).max()
            if norm_c < norm or t < 1e-8:
                break
            t *= 0.5
        alpha, p, score, norm = cand, p_c, score_c, norm_c
        trace.append((it, norm, t))
        if np.abs(alpha).max() > MAX_LOGIT_COEF:
            raise NonConvergenceError("logistic coefficients diverge (quasi-separation)", trace)
    if norm <= tol * scale:
        return LogisticFit(alpha, max_iter, norm, trace)
    raise NonConvergenceError(f"no convergence after {max_iter} Newton iterations", trace)


def fit_wls(X: np.ndarray, y: np.ndarray, phi: np.ndarray, block: str = "imputation normal equations") -> np.ndarray:
    """Weighted least squares via the normal equations ``(X' Phi X) b = X' Phi y``."""
    check_rank(X * np.sqrt(phi)[:, None], block)
    return solve_spd((X * phi[:, None]).T @ X, X.T @ (phi * y), block)


def fit_nonresponse(spec: NonresponseModelSpec, covariates, r, w) -> LogisticFit:
    X = design_matrix(spec.terms, covariates, len(r))
    return fit_logistic(X, r, _phi_weights(spec.phi, np.asarray(w, dtype=float)))


def fit_imputation(spec: ImputationModelSpec, covariates, y, r, w) -> np.ndarray:
    """Fit a linear imputation model on respondents (``r == 1``)."""
    r = np.asarray(r).astype(bool)
    X = design_matrix(spec.terms, covariates, len(r))[r]
    phi = _phi_weights(spec.phi, np.asarray(w, dtype=float)[r])
    return fit_wls(X, np.asarray(y, dtype=float)[r], phi)


@dataclass(frozen=True)
class Compression:
    eta: np.ndarray
    weights: np.ndarray  # eta**2 / eta'eta
    score: np.ndarray


def compress_scores(U: np.ndarray, target: np.ndarray, w: np.ndarray, mask: np.ndarray | None = None,
                    block: str = "score compression") -> Compression:
    """Regress ``target`` on the columns of ``U`` (no intercept, weights ``w``)
    over ``mask`` and blend the columns with weights ``eta^2 / eta'eta``.

    The blended score is evaluated for every row of ``U``.
    """
    if mask is None:
        mask = np.ones(U.shape[0], dtype=bool)
    Us, ts, ws = U[mask], target[mask], w[mask]
    gram = (Us * ws[:, None]).T @ Us
    if Us.shape[0] < Us.shape[1]:
        raise SingularSystemError("fewer units than models", block=block)
    check_rank(Us * np.sqrt(ws)[:, None], block)
    eta = solve_spd(gram, Us.T @ (ws * ts), block)
    q = eta @ eta
    if q == 0.0:
        raise DegenerateCompressionError(f"{block}: all compression coefficients are zero")
    c = eta ** 2 / q
    return Compression(eta, c, U @ c)


@dataclass
class FittedModelSuite:
    """All fitted working models for one sample, plus the compressed scores.

    ``p_hat`` is clamped to ``P_CLAMP``; ``p_raw`` keeps the unclamped blend.
    Both are ``None`` when the suite has no nonresponse model.
    """

    spec: SuiteSpec
    X_p: list
    X_m: list
    alpha: list
    beta: list
    U_p: np.ndarray | None
    U_m: np.ndarray
    comp_p: Compression | None
    comp_m: Compression
    p_raw: np.ndarray | None
    p_hat: np.ndarray | None
    clamped: np.ndarray | None
    logistic_fits: list = field(default_factory=list)

    @property
    def m_hat(self) -> np.ndarray:
        return self.comp_m.score

    @property
    def n_clamped(self) -> int:
        return 0 if self.clamped is None else int(self.clamped.sum())


def fit_suite(spec: SuiteSpec, covariates: Mapping[str, np.ndarray], y, r, w) -> FittedModelSuite:
    """Fit every working model and compress them into ``p_hat`` and ``m_hat``."""
    r = np.asarray(r).astype(np.int8)
    w = np.asarray(w, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(r)
    resp = r == 1
    y0 = np.where(resp, y, 0.0)

    X_p, alpha, fits = [], [], []
    for s in spec.nonresponse:
        X = design_matrix(s.terms, covariates, n)
        fit = fit_logistic(X, r, _phi_weights(s.phi, w))
        X_p.append(X)
        alpha.append(fit.coef)
        fits.append(fit)

    X_m, beta = [], []
    for s in spec.imputation:
        X = design_matrix(s.terms, covariates, n)
        b = fit_wls(X[resp], y0[resp], _phi_weights(s.phi, w)[resp])
        X_m.append(X)
        beta.append(b)

    U_m = np.column_stack([X @ b for X, b in zip(X_m, beta)])
    comp_m = compress_scores(U_m, y0, w, resp, block="imputation score compression")
    if spec.J:
        U_p = np.column_stack([expit(X @ a) for X, a in zip(X_p, alpha)])
        comp_p = compress_scores(U_p, r.astype(float), w, block="nonresponse score compression")
        p_raw = comp_p.score
        clamped = (p_raw < P_CLAMP[0]) | (p_raw > P_CLAMP[1])
        p_hat = np.clip(p_raw, *P_CLAMP)
    else:
        U_p = comp_p = p_raw = p_hat = clamped = None
    return FittedModelSuite(spec, X_p, X_m, alpha, beta, U_p, U_m, comp_p, comp_m,
                            p_raw, p_hat, clamped, fits)
