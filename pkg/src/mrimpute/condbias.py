"""Linearization of the multiply robust total and its estimated conditional bias.

The imputed total is written as ``sum_k w_k psi_k`` to first order.  Every
parameter of the procedure (the J logistic fits, the L linear fits, the two
compression regressions and the final ``tau`` regression) solves a weighted
estimating equation, so ``psi_k`` is the total's own contribution ``g_k`` plus,
for each parameter block ``b``, a row vector ``A_b`` times unit ``k``'s
estimating function.  The ``A_b`` follow from implicit differentiation of the
stacked equations; the Jacobian is block lower triangular, so they are solved
from the ``tau`` block backwards.  Expectation blocks are weighted sample sums;
their common normalization cancels in every ``A_b``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .design import FixedSizeDesign, SrsworDesign
from .errors import SingularSystemError
from .impute import ImputationResult
from .models import FittedModelSuite, P_CLAMP, check_rank, expit, solve_spd


@dataclass
class LinearizedPsi:
    psi: np.ndarray
    g: np.ndarray
    A_alpha: list = field(default_factory=list)
    A_beta: list = field(default_factory=list)
    A_p: np.ndarray | None = None
    A_m: np.ndarray | None = None
    A_tau: np.ndarray | None = None


@dataclass(frozen=True)
class CondBiasEstimate:
    values: np.ndarray
    b_min: float
    b_max: float
    argmin: int
    argmax: int

    @property
    def shift(self) -> float:
        """Midrange ``(b_min + b_max) / 2`` subtracted by the robust estimator."""
        return 0.5 * (self.b_min + self.b_max)


@dataclass
class _Inputs:
    X_p: list
    X_m: list
    phi_p: list
    phi_m: list
    y0: np.ndarray
    r: np.ndarray
    w: np.ndarray

    @classmethod
    def build(cls, suite: FittedModelSuite, y, r, w):
        w = np.asarray(w, dtype=float)
        r = np.asarray(r).astype(float)
        y0 = np.where(r == 1, np.asarray(y, dtype=float), 0.0)
        phi_p = [w if s.phi == "w" else np.ones_like(w) for s in suite.spec.nonresponse]
        phi_m = [w if s.phi == "w" else np.ones_like(w) for s in suite.spec.imputation]
        return cls(list(suite.X_p), list(suite.X_m), phi_p, phi_m, y0, r, w)


def suite_parameters(suite: FittedModelSuite, imp: ImputationResult) -> dict:
    return {
        "alpha": [a.copy() for a in suite.alpha],
        "beta": [b.copy() for b in suite.beta],
        "eta_p": None if suite.comp_p is None else suite.comp_p.eta.copy(),
        "eta_m": suite.comp_m.eta.copy(),
        "tau": imp.tau.copy(),
    }


def evaluate_equations(params: dict, inp: _Inputs) -> dict:
    """Evaluate the total and every weighted estimating-equation sum at ``params``.

    The compression and ``tau`` coefficients are taken from ``params`` rather
    than re-solved, which makes this the map whose Jacobian drives the
    linearization.  Used by tests for finite-difference cross-checks.
    """
    y0, r, w = inp.y0, inp.r, inp.w
    out = {"alpha": [], "beta": []}
    U_p_cols = []
    for X, a, phi in zip(inp.X_p, params["alpha"], inp.phi_p):
        p = expit(X @ a)
        U_p_cols.append(p)
        out["alpha"].append(X.T @ (phi * (r - p)))
    U_m_cols = []
    for X, b, phi in zip(inp.X_m, params["beta"], inp.phi_m):
        m = X @ b
        U_m_cols.append(m)
        out["beta"].append(X.T @ (phi * r * (y0 - m)))
    U_m = np.column_stack(U_m_cols)
    eta_m = params["eta_m"]
    out["eta_m"] = U_m.T @ (w * r * (y0 - U_m @ eta_m))
    m_hat = U_m @ (eta_m ** 2 / (eta_m @ eta_m))
    if inp.X_p:
        U_p = np.column_stack(U_p_cols)
        eta_p = params["eta_p"]
        out["eta_p"] = U_p.T @ (w * (r - U_p @ eta_p))
        p_hat = np.clip(U_p @ (eta_p ** 2 / (eta_p @ eta_p)), *P_CLAMP)
        rho, pg = 1.0 / p_hat - 1.0, p_hat
    else:
        rho, pg = np.ones_like(w), np.ones_like(w)
    tau = params["tau"]
    fit = tau[0] + tau[1] * m_hat
    e = y0 - fit
    out["tau"] = np.array([np.sum(w * r * rho * e), np.sum(w * r * rho * e * m_hat)])
    out["total"] = float(np.sum(w * (r * y0 / pg + (1 - r / pg) * fit)))
    return out


def linearized_psi(suite: FittedModelSuite, imp: ImputationResult, y, r, w) -> LinearizedPsi:
    """Estimated linearized variable ``psi_k`` for every sample unit.

    When every sampled unit responded the imputed total is the HT total and
    ``psi_k = y_k``.
    """
    r_arr = np.asarray(r).astype(float)
    if r_arr.min() == 1.0:
        yy = np.asarray(y, dtype=float)
        return LinearizedPsi(yy.copy(), yy.copy())

    inp = _Inputs.build(suite, y, r, w)
    y0, rr, w = inp.y0, inp.r, inp.w
    n = len(w)
    J, L = suite.spec.J, suite.spec.L
    tau = imp.tau
    h = imp.h
    m_hat = suite.m_hat
    fit = h @ tau
    e = y0 - fit

    # Compressed imputation score m_hat and its derivatives.
    eta_m = suite.comp_m.eta
    c_m = suite.comp_m.weights
    U_m = suite.U_m
    Q_m = eta_m @ eta_m
    dm_deta = 2.0 * eta_m[None, :] * (U_m - m_hat[:, None]) / Q_m
    dm_dbeta = [c_m[l] * X for l, X in enumerate(inp.X_m)]

    if J:
        p_hat = suite.p_hat
        eta_p = suite.comp_p.eta
        c_p = suite.comp_p.weights
        U_p = suite.U_p
        Q_p = eta_p @ eta_p
        free = (~suite.clamped).astype(float)
        dp_deta = free[:, None] * 2.0 * eta_p[None, :] * (U_p - suite.p_raw[:, None]) / Q_p
        dU_dalpha = [(U_p[:, j] * (1 - U_p[:, j]))[:, None] * X for j, X in enumerate(inp.X_p)]
        dp_dalpha = [free[:, None] * c_p[j] * d for j, d in enumerate(dU_dalpha)]
        rho = 1.0 / p_hat - 1.0
        pg = p_hat
    else:
        rho = np.ones(n)
        pg = np.ones(n)

    # Total: g_k = r y / p + (1 - r / p) h'tau.
    g = rr * y0 / pg + (1 - rr / pg) * fit
    dg_dtau = (1 - rr / pg)[:, None] * h
    dg_dm = (1 - rr / pg) * tau[1]

    # tau equation: s = r rho (y - h'tau) h.
    s_tau = (rr * rho * e)[:, None] * h
    H_tt = -(h * (w * rr * rho)[:, None]).T @ h
    ds_tau_dm = (rr * rho)[:, None] * (np.outer(e, [0.0, 1.0]) - tau[1] * h)

    def wsum_outer(a, b):
        return np.einsum("i,ij,ik->jk", w, a, b)

    G_tau = w @ dg_dtau
    A_tau = _solve_row(H_tt, -G_tau, "E(dU_tau/dtau)")

    # eta_m block.
    res_m = y0 - U_m @ eta_m
    s_eta_m = (rr * res_m)[:, None] * U_m
    H_mm = -(U_m * (w * rr)[:, None]).T @ U_m
    G_eta_m = w @ (dg_dm[:, None] * dm_deta)
    H_tau_m = wsum_outer(ds_tau_dm, dm_deta)
    A_m = _solve_row(H_mm, -(G_eta_m + A_tau @ H_tau_m), "E(dU_m/deta_m)")

    # beta blocks.
    A_beta, s_beta = [], []
    for l, X in enumerate(inp.X_m):
        phi = inp.phi_m[l]
        H_bb = -(X * (phi * rr)[:, None]).T @ X
        G_b = w @ (dg_dm[:, None] * dm_dbeta[l])
        H_tau_b = wsum_outer(ds_tau_dm, dm_dbeta[l])
        coef = -eta_m[l] * U_m * rr[:, None]
        coef[:, l] += rr * res_m
        H_m_b = wsum_outer(coef, X)
        A_b = _solve_row(H_bb, -(G_b + A_tau @ H_tau_b + A_m @ H_m_b), f"E(dS_beta/dbeta) model {l + 1}")
        A_beta.append(A_b)
        resid = rr * (y0 - X @ suite.beta[l])
        s_beta.append((phi / w * resid)[:, None] * X)

    psi = g + s_tau @ A_tau + s_eta_m @ A_m + sum(s @ a for s, a in zip(s_beta, A_beta))

    A_p, A_alpha = None, []
    if J:
        dg_dp = -rr * e / pg ** 2
        ds_tau_dp = (rr * (-1.0 / p_hat ** 2) * e)[:, None] * h
        res_p = rr - U_p @ eta_p
        s_eta_p = res_p[:, None] * U_p
        H_pp = -(U_p * w[:, None]).T @ U_p
        G_eta_p = w @ (dg_dp[:, None] * dp_deta)
        H_tau_p = wsum_outer(ds_tau_dp, dp_deta)
        A_p = _solve_row(H_pp, -(G_eta_p + A_tau @ H_tau_p), "E(dU_p/deta_p)")
        psi = psi + s_eta_p @ A_p
        for j, X in enumerate(inp.X_p):
            phi = inp.phi_p[j]
            pj = U_p[:, j]
            H_aa = -(X * (phi * pj * (1 - pj))[:, None]).T @ X
            G_a = w @ (dg_dp[:, None] * dp_dalpha[j])
            H_tau_a = wsum_outer(ds_tau_dp, dp_dalpha[j])
            coef = -eta_p[j] * U_p
            coef[:, j] += res_p
            H_p_a = wsum_outer(coef, dU_dalpha[j])
            A_a = _solve_row(H_aa, -(G_a + A_tau @ H_tau_a + A_p @ H_p_a), f"E(dS_alpha/dalpha) model {j + 1}")
            A_alpha.append(A_a)
            s_a = (phi / w * (rr - pj))[:, None] * X
            psi = psi + s_a @ A_a

    return LinearizedPsi(psi, g, A_alpha, A_beta, A_p, A_m, A_tau)


def _solve_row(H: np.ndarray, rhs: np.ndarray, block: str) -> np.ndarray:
    """Solve ``a H = rhs`` for the row vector ``a``."""
    try:
        a = np.linalg.solve(H.T, rhs)
    except np.linalg.LinAlgError:
        raise SingularSystemError("singular expectation block", block=block) from None
    if not np.all(np.isfinite(a)):
        raise SingularSystemError("singular expectation block", block=block)
    return a


def single_model_psi(X: np.ndarray, y, r, w) -> np.ndarray:
    """Linearized variable for imputation from one linear model and no
    nonresponse model: ``psi_k = y_k + (r_k a_k - 1)(y_k - x_k'beta_r)`` with
    ``a_k = 1 + (t_x - t_xr)' T_r^{-1} x_k``.

    For nonrespondents ``y_k`` cancels, leaving ``x_k'beta_r``.
    """
    r = np.asarray(r).astype(float)
    w = np.asarray(w, dtype=float)
    y0 = np.where(r == 1, np.asarray(y, dtype=float), 0.0)
    check_rank(X[r == 1] * np.sqrt(w[r == 1])[:, None], "T_r")
    wr = w * r
    T_r = (X * wr[:, None]).T @ X
    beta_r = solve_spd(T_r, X.T @ (wr * y0), "T_r")
    t_x = X.T @ w
    t_xr = X.T @ wr
    a = 1.0 + X @ solve_spd(T_r, t_x - t_xr, "T_r")
    pred = X @ beta_r
    return np.where(r == 1, y0 + (a - 1.0) * (y0 - pred), pred)


def est_cond_bias_mr(design: FixedSizeDesign, psi, ids=None) -> CondBiasEstimate:
    """Estimated conditional bias of each sample unit from the linearized values."""
    psi = np.asarray(psi, dtype=float)
    if isinstance(design, SrsworDesign) and len(psi) == design.n:
        b = design.cond_bias_estimates(psi)
    else:
        if ids is None:
            ids = np.arange(len(psi))
        b = design.cond_bias_matrix(np.asarray(ids)) @ psi
    return cond_bias_summary(b)


def cond_bias_summary(values) -> CondBiasEstimate:
    """Extremes of per-unit conditional biases; NaN entries (units never seen
    by a bootstrap) are skipped."""
    b = np.asarray(values, dtype=float)
    if np.all(np.isnan(b)):
        raise SingularSystemError("no finite conditional-bias estimate", block="conditional bias")
    lo, hi = int(np.nanargmin(b)), int(np.nanargmax(b))
    return CondBiasEstimate(b, float(b[lo]), float(b[hi]), lo, hi)


def robust_mr_total(t_mr: float, cb: CondBiasEstimate) -> float:
    """Imputed total minus the midrange of the estimated conditional biases."""
    return t_mr - cb.shift
