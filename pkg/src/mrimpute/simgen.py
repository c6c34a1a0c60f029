"""Synthetic populations with a quadratic conditional mean and a logistic
response mechanism.

Each family is moment matched per unit to mean ``mu_i`` and variance
``sigma2``:

* normal: ``N(mu, sigma2)``
* gamma: shape ``mu^2 / sigma2``, scale ``sigma2 / mu``
* lognormal: ``s2 = log(1 + sigma2 / mu^2)``, ``m = log(mu) - s2 / 2``
* pareto (type I): shape ``1 + sqrt(1 + mu^2 / sigma2)``, scale ``mu (shape - 1) / shape``
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import FinitePopulation
from .errors import ConfigError
from .models import expit

FAMILIES = ("normal", "gamma", "lognormal", "pareto")
DEFAULT_SIGMA2 = {"normal": 500.0, "gamma": 50.0, "lognormal": 30.0, "pareto": 20.0}
RESPONSE_COEF = (1.5, -1.5, 0.4)
V1_RANGE = (0.0, 5.0)
V2_RANGE = (0.0, 4.0)
SIM_COVARIATES = ("v1", "v2")


@dataclass(frozen=True)
class PopulationSpec:
    N: int
    distribution: str
    beta: tuple[float, float, float]
    sigma2: float | None = None

    def __post_init__(self):
        if self.distribution not in FAMILIES:
            raise ConfigError(f"unknown distribution {self.distribution!r}; expected one of {FAMILIES}")
        if self.N < 1:
            raise ConfigError("N must be positive")
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if len(self.beta) != 3:
            raise ConfigError("beta must have three entries")
        if self.sigma2 is None:
            object.__setattr__(self, "sigma2", DEFAULT_SIGMA2[self.distribution])
        if self.sigma2 <= 0:
            raise ConfigError("sigma2 must be positive")
        if self.distribution != "normal":
            lo = min(self.mean(np.array([V1_RANGE[0], V1_RANGE[1], self._vertex()])))
            if lo <= 0:
                raise ConfigError(f"{self.distribution} needs a positive mean over v1 in {V1_RANGE}")

    def _vertex(self) -> float:
        b0, b1, b2 = self.beta
        if b2 == 0:
            return V1_RANGE[0]
        return float(np.clip(-b1 / (2 * b2), *V1_RANGE))

    def mean(self, v1):
        b0, b1, b2 = self.beta
        return b0 + b1 * v1 + b2 * v1 * v1


def gamma_params(mu, sigma2):
    """(shape, scale) with mean ``mu`` and variance ``sigma2``."""
    mu = np.asarray(mu, dtype=float)
    return mu * mu / sigma2, sigma2 / mu


def lognormal_params(mu, sigma2):
    """(meanlog, sdlog) with mean ``mu`` and variance ``sigma2``."""
    mu = np.asarray(mu, dtype=float)
    s2 = np.log1p(sigma2 / (mu * mu))
    return np.log(mu) - 0.5 * s2, np.sqrt(s2)


def pareto_params(mu, sigma2):
    """(shape, scale) of a type I Pareto with mean ``mu`` and variance ``sigma2``."""
    mu = np.asarray(mu, dtype=float)
    shape = 1.0 + np.sqrt(1.0 + mu * mu / sigma2)
    return shape, mu * (shape - 1.0) / shape


def draw_family(distribution: str, mu, sigma2: float, rng: np.random.Generator) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    if distribution == "normal":
        return mu + np.sqrt(sigma2) * rng.standard_normal(mu.shape)
    if np.any(mu <= 0):
        raise ConfigError(f"{distribution} requires positive means")
    if distribution == "gamma":
        k, theta = gamma_params(mu, sigma2)
        return rng.gamma(k, theta)
    if distribution == "lognormal":
        m, s = lognormal_params(mu, sigma2)
        return np.exp(m + s * rng.standard_normal(mu.shape))
    if distribution == "pareto":
        a, xm = pareto_params(mu, sigma2)
        # numpy's pareto is the Lomax form; shift by one for type I.
        return xm * (1.0 + rng.pareto(a))
    raise ConfigError(f"unknown distribution {distribution!r}")


def gen_population(spec: PopulationSpec, rng: np.random.Generator) -> FinitePopulation:
    """Draw ``v1``, ``v2`` (always first, so equal seeds share them) and ``y``."""
    v1 = rng.uniform(*V1_RANGE, spec.N)
    v2 = rng.uniform(*V2_RANGE, spec.N)
    y = draw_family(spec.distribution, spec.mean(v1), spec.sigma2, rng)
    return FinitePopulation(y, {"v1": v1, "v2": v2})


def response_probability(v1) -> np.ndarray:
    b0, b1, b2 = RESPONSE_COEF
    v1 = np.asarray(v1, dtype=float)
    return expit(b0 + b1 * v1 + b2 * v1 * v1)


def gen_response(v1, rng: np.random.Generator) -> np.ndarray:
    """Independent Bernoulli response indicators."""
    p = response_probability(v1)
    return (rng.random(p.shape) < p).astype(np.int8)
