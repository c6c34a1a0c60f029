"""Dataset mode: estimation on a user CSV and the CSV shapes used by the CLI.

Row numbers in error messages are 1-based data rows (the header is row 0),
so row ``k`` sits on line ``k + 1`` of the file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .bootstrap import bootstrap_cond_bias
from .calibrate import CalibrationProblem, LogitDistance, calibrate_chi_square, calibrate_general
from .condbias import cond_bias_summary, robust_mr_total
from .design import SrsworDesign, draw_srswor_ids
from .errors import InputError
from .models import SuiteSpec, parse_term
from .pipeline import Estimate, SurveyData, estimate
from .simgen import PopulationSpec, gen_population, gen_response

SAMPLE_COLUMNS = ("id", "w", "r", "y")
WEIGHT_RTOL = 1e-9


def read_csv(path) -> pd.DataFrame:
    """All cells as strings so blanks and junk can be reported precisely."""
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except FileNotFoundError:
        raise
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise InputError(f"{path}: malformed CSV ({exc})") from exc


def _parse_float(text: str) -> float:
    # float() rounds correctly, so repr-written values read back bit-exact
    try:
        return float(text) if text else math.nan
    except ValueError:
        return math.nan


def _require(df: pd.DataFrame, cols) -> None:
    missing = [c for c in cols if c not in df.columns]
    if missing:
        raise InputError(f"missing required columns {missing}; found {list(df.columns)}")


def numeric_column(df: pd.DataFrame, col: str, allow_blank=None) -> np.ndarray:
    """Parse ``col`` to float; ``allow_blank`` is a boolean mask of rows where a
    blank becomes NaN instead of an error."""
    raw = df[col].astype(str).str.strip()
    blank = raw.eq("").to_numpy()
    vals = np.array([_parse_float(v) for v in raw], dtype=float)
    ok_blank = np.zeros(len(df), bool) if allow_blank is None else np.asarray(allow_blank, bool)
    bad = (blank & ~ok_blank) | (~blank & ~np.isfinite(vals))
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        what = "blank" if blank[k] else f"non-numeric value {df[col].iloc[k]!r}"
        raise InputError(f"{what} in column {col!r}", row=k + 1)
    return vals


def response_column(df: pd.DataFrame) -> np.ndarray:
    r = numeric_column(df, "r")
    bad = ~np.isin(r, (0.0, 1.0))
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise InputError(f"response indicator must be 0 or 1, got {df['r'].iloc[k]!r}", row=k + 1)
    return r.astype(np.int8)


def positive_column(df: pd.DataFrame, col: str) -> np.ndarray:
    v = numeric_column(df, col)
    if (v <= 0).any():
        k = int(np.flatnonzero(v <= 0)[0])
        raise InputError(f"{col} must be positive", row=k + 1)
    return v


def infer_design(w: np.ndarray, N: int | None = None) -> SrsworDesign:
    """SRSWOR design of the sample; ``N`` from the caller or from constant weights."""
    n = len(w)
    if N is not None:
        if N < n:
            raise InputError(f"population size N={N} is smaller than the {n} sample rows")
        return SrsworDesign(N, n)
    dev = np.abs(w - w[0]) > WEIGHT_RTOL * abs(w[0])
    if dev.any():
        k = int(np.flatnonzero(dev)[0])
        raise InputError(
            f"weights are not constant, so N cannot be inferred; pass the population size",
            row=k + 1,
        )
    N_float = float(w[0]) * n
    N_int = int(round(N_float))
    if abs(N_float - N_int) > 1e-6 * max(1.0, N_float) or N_int < n:
        raise InputError(f"constant weight {w[0]!r} times n={n} is not a valid population size")
    return SrsworDesign(N_int, n)


def predictor_columns(df: pd.DataFrame, spec: SuiteSpec) -> list[str]:
    names = []
    for m in (*spec.nonresponse, *spec.imputation):
        for t in m.terms:
            name, _ = parse_term(t)
            if name is not None and name not in names:
                names.append(name)
    return names


def survey_data_from_frame(df: pd.DataFrame, spec: SuiteSpec, N: int | None = None) -> SurveyData:
    _require(df, SAMPLE_COLUMNS)
    if len(df) == 0:
        raise InputError("no data rows")
    preds = predictor_columns(df, spec)
    _require(df, preds)
    if df["id"].astype(str).str.strip().eq("").any():
        k = int(np.flatnonzero(df["id"].astype(str).str.strip().eq("").to_numpy())[0])
        raise InputError("blank id", row=k + 1)
    w = positive_column(df, "w")
    r = response_column(df)
    y = numeric_column(df, "y", allow_blank=r == 0)
    y = np.where(r == 1, y, np.nan)
    cov = {c: numeric_column(df, c) for c in preds}
    design = infer_design(w, N)
    return SurveyData(y, r, cov, design, weights=w)


@dataclass
class DatasetResult:
    frame: pd.DataFrame
    summary: dict
    estimate: Estimate


def impute_dataset(df: pd.DataFrame, spec: SuiteSpec, N: int | None = None, calibrate: bool = False,
                   bootstrap_M: int | None = None, seed: int = 20240101, workers: int = 1) -> DatasetResult:
    """Impute, linearize and summarise a sample frame.

    Output columns are the input ones plus ``y_imputed``, ``psi_hat`` and
    ``cond_bias``; ``cond_bias_boot`` with a bootstrap and ``y_final``
    (imputed values calibrated to the robust total) with ``calibrate``.
    """
    data = survey_data_from_frame(df, spec, N)
    est = estimate(data, spec)
    ids = df["id"].astype(str).tolist()
    y_imp = data.y.copy() if est.imputation is None else est.imputation.completed(data.y, data.r)
    out = df.copy()
    out["y_imputed"] = y_imp
    out["psi_hat"] = est.psi.psi
    out["cond_bias"] = est.cond_bias.values
    cb = est.cond_bias
    summary = {
        "n": data.n,
        "N": data.design.N,
        "respondents": int(data.r.sum()),
        "t_mr": est.t_mr,
        "t_robust": est.t_robust,
        "b_min": cb.b_min,
        "b_min_id": ids[cb.argmin],
        "b_max": cb.b_max,
        "b_max_id": ids[cb.argmax],
        "clamped_units": est.n_clamped,
    }
    if bootstrap_M:
        boot = bootstrap_cond_bias(data, spec, bootstrap_M, seed, workers)
        out["cond_bias_boot"] = boot.b_hat
        bcb = cond_bias_summary(boot.b_hat)
        summary["bootstrap"] = {
            "M": bootstrap_M,
            "seed": seed,
            "dropped": boot.dropped,
            "unseen_ids": [ids[i] for i in boot.unseen],
            "t_robust": robust_mr_total(est.t_mr, bcb),
            "b_min": bcb.b_min,
            "b_min_id": ids[bcb.argmin],
            "b_max": bcb.b_max,
            "b_max_id": ids[bcb.argmax],
        }
    if calibrate:
        y_final = y_imp.copy()
        if est.imputation is not None:
            prob = CalibrationProblem.from_sample(data.y, data.r, data.weights, est.imputation.y_star,
                                                  est.t_robust)
            y_final[data.r == 0] = calibrate_chi_square(prob)
        out["y_final"] = y_final
        summary["calibrated_total"] = float(data.weights @ y_final)
    return DatasetResult(out, summary, est)


def calibrate_frame(df: pd.DataFrame, target: float, distance: str = "chi2",
                    bounds: tuple[float, float] = (0.5, 2.0)) -> tuple[pd.DataFrame, dict]:
    """Columns id, w, r, y, y_star and optional q; appends ``y_star_final``
    (blank for respondents)."""
    _require(df, ("id", "w", "r", "y", "y_star"))
    w = positive_column(df, "w")
    r = response_column(df)
    y = numeric_column(df, "y", allow_blank=r == 0)
    y_star = numeric_column(df, "y_star", allow_blank=r == 1)
    q = positive_column(df, "q") if "q" in df.columns else np.ones(len(df))
    nr = r == 0
    prob = CalibrationProblem(y_star[nr], w[nr], float(target), float(w[~nr] @ y[~nr]), q[nr])
    if distance == "chi2":
        final = calibrate_chi_square(prob)
    elif distance == "logit":
        final = calibrate_general(prob, LogitDistance(*bounds))
    else:
        raise InputError(f"unknown distance {distance!r}")
    col = np.full(len(df), np.nan)
    col[nr] = final
    out = df.copy()
    out["y_star_final"] = col
    achieved = prob.achieved(final)
    summary = {"target": float(target), "achieved": achieved, "distance": distance,
               "relative_residual": abs(achieved - target) / abs(target) if target else math.nan,
               "nonrespondents": int(nr.sum())}
    return out, summary


def population_frame(spec: PopulationSpec, seed: int) -> pd.DataFrame:
    pop = gen_population(spec, np.random.default_rng(seed))
    return pd.DataFrame({"id": np.arange(1, pop.N + 1), "v1": pop.covariates["v1"],
                         "v2": pop.covariates["v2"], "y": pop.y})


def sample_frame(spec: PopulationSpec, seed: int, n: int) -> tuple[pd.DataFrame, SurveyData]:
    """SRSWOR sample of the generated population with simulated response;
    ``y`` is blank for nonrespondents."""
    pop = gen_population(spec, np.random.default_rng(seed))
    rng = np.random.default_rng([seed, 1])
    ids = np.sort(draw_srswor_ids(pop.N, n, rng))
    cov = {k: v[ids] for k, v in pop.covariates.items()}
    r = gen_response(cov["v1"], rng)
    y = np.where(r == 1, pop.y[ids], np.nan)
    data = SurveyData(y, r, cov, SrsworDesign(pop.N, n))
    df = pd.DataFrame({"id": ids + 1, "w": data.weights, "r": r, "y": y, "v1": cov["v1"], "v2": cov["v2"]})
    return df, data


def _fmt(x) -> str:
    return "" if x != x else repr(float(x))


def write_csv(df: pd.DataFrame, path) -> None:
    """Floats as shortest round-trip repr; NaN as a blank cell."""
    out = df.copy()
    for col in out.columns:
        if pd.api.types.is_float_dtype(out[col]):
            out[col] = out[col].map(_fmt)
    out.to_csv(path, index=False)
