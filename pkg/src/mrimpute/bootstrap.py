"""Pseudo-population bootstrap estimate of each unit's conditional bias.

A pseudo-population repeats every sample unit ``floor(1/pi_i)`` times and adds
one more copy with probability ``1/pi_i - floor(1/pi_i)`` (independent
Bernoulli completion).  Bootstrap samples are drawn from it by SRSWOR of the
original size, re-imputed with the same working models, and the errors
``t_MR* - t_y*`` are averaged over the replicates that contain at least one
copy of each original unit.

Response indicators travel with the copies.  Nonrespondents carry their
imputed value from the original sample into the pseudo-population total.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import SrsworDesign, draw_srswor_ids
from .errors import NumericalError
from .models import SuiteSpec
from .parallel import parallel_map, split_range
from .pipeline import SurveyData, fit_and_impute, mr_estimate


@dataclass(frozen=True)
class PseudoPopulation:
    origin: np.ndarray  # index of the original sample unit behind each record
    y: np.ndarray
    r: np.ndarray
    covariates: dict
    n_fixed: int

    @property
    def size(self) -> int:
        return len(self.origin)

    @property
    def total(self) -> float:
        return float(self.y.sum())


@dataclass
class BootstrapResult:
    b_hat: np.ndarray  # NaN where the unit never appeared
    counts: np.ndarray  # M_i
    t_star_y: np.ndarray
    t_star_mr: np.ndarray  # NaN for dropped replicates
    dropped: int

    @property
    def unseen(self) -> np.ndarray:
        return np.flatnonzero(self.counts == 0)


def completed_values(data: SurveyData, spec: SuiteSpec) -> np.ndarray:
    """Observed ``y`` for respondents, imputed values for nonrespondents."""
    _, imp = fit_and_impute(data, spec)
    if imp is None:
        return data.y.copy()
    return imp.completed(data.y, data.r)


def build_pseudo_population(data: SurveyData, rng: np.random.Generator, y_complete=None) -> PseudoPopulation:
    inv = 1.0 / data.design.pi(np.arange(data.n))
    base = np.floor(inv + 1e-12).astype(np.int64)
    frac = np.clip(inv - base, 0.0, 1.0)
    extra = (rng.random(data.n) < frac).astype(np.int64)
    origin = np.repeat(np.arange(data.n), base + extra)
    y = data.y if y_complete is None else np.asarray(y_complete, dtype=float)
    return PseudoPopulation(
        origin, y[origin], data.r[origin], {k: v[origin] for k, v in data.covariates.items()},
        int(base.sum()),
    )


def _bootstrap_replicate(data: SurveyData, spec: SuiteSpec, y_complete, seed, m: int):
    rng = np.random.default_rng([*np.atleast_1d(seed).tolist(), m])
    pp = build_pseudo_population(data, rng, y_complete)
    ids = draw_srswor_ids(pp.size, data.n, rng)
    r = pp.r[ids]
    y = np.where(r == 1, pp.y[ids], np.nan)
    boot = SurveyData(y, r, {k: v[ids] for k, v in pp.covariates.items()}, SrsworDesign(pp.size, data.n))
    try:
        t = mr_estimate(boot, spec)
    except NumericalError:
        t = float("nan")
    return pp.total, t, np.unique(pp.origin[ids])


def _chunk(args):
    data, spec, y_complete, seed, ms = args
    return [_bootstrap_replicate(data, spec, y_complete, seed, m) for m in ms]


def bootstrap_cond_bias(data: SurveyData, spec: SuiteSpec, M: int, seed, workers: int = 1) -> BootstrapResult:
    """``seed`` is an int or a sequence of ints; replicate ``m`` uses
    ``default_rng([*seed, m])``."""
    if M < 1:
        raise ValueError("M must be at least 1")
    y_complete = completed_values(data, spec)
    jobs = [(data, spec, y_complete, seed, ms) for ms in split_range(M, workers)]
    reps = [rep for chunk in parallel_map(_chunk, jobs, workers) for rep in chunk]

    t_y = np.array([rep[0] for rep in reps])
    t_mr = np.array([rep[1] for rep in reps])
    sums = np.zeros(data.n)
    counts = np.zeros(data.n, dtype=np.int64)
    dropped = 0
    for ty, tm, members in reps:
        if np.isnan(tm):
            dropped += 1
            continue
        sums[members] += tm - ty
        counts[members] += 1
    with np.errstate(invalid="ignore", divide="ignore"):
        b_hat = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return BootstrapResult(b_hat, counts, t_y, t_mr, dropped)
