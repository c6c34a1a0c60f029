"""Finite populations, SRSWOR designs and Horvitz-Thompson estimation.

The conditional bias of a unit is the design expectation of the estimation
error given that the unit is sampled.  For the Horvitz-Thompson (HT) estimator
of a total it is ``sum_k Delta_ik / (pi_i pi_k) y_k`` over the population, and
the conditionally unbiased estimator sums ``Delta_ik / (pi_k pi_ik) y_k`` over
the sample, with the diagonal convention ``pi_ii = pi_i``.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import IncompleteDataError, InvalidDesignError, NotInSampleError


@dataclass(frozen=True)
class FinitePopulation:
    """Column-oriented finite population.

    ``y`` may contain NaN for units whose value is unknown; ``covariates`` maps
    predictor names (e.g. ``"v1"``) to fully observed arrays of length N.
    ``r`` holds fixed response indicators when the population carries them.
    """

    y: np.ndarray
    covariates: Mapping[str, np.ndarray] = field(default_factory=dict)
    r: np.ndarray | None = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "y", y)
        cov = {k: np.asarray(v, dtype=float) for k, v in self.covariates.items()}
        for name, col in cov.items():
            if col.shape != y.shape:
                raise ValueError(f"covariate {name!r} has shape {col.shape}, expected {y.shape}")
            if np.isnan(col).any():
                raise ValueError(f"covariate {name!r} has missing entries")
        object.__setattr__(self, "covariates", cov)
        if self.r is not None:
            r = np.asarray(self.r, dtype=np.int8)
            if r.shape != y.shape:
                raise ValueError("response indicator length differs from y")
            if np.isnan(y[r == 1]).any():
                raise ValueError("respondents must have an observed y")
            object.__setattr__(self, "r", r)

    @property
    def N(self) -> int:
        return int(self.y.shape[0])

    @property
    def ids(self) -> np.ndarray:
        return np.arange(self.N)

    @property
    def total(self) -> float:
        return float(self.y.sum())


class FixedSizeDesign(ABC):
    """Fixed-size sampling design described by its inclusion probabilities."""

    N: int
    n: int

    @abstractmethod
    def pi(self, ids: np.ndarray) -> np.ndarray:
        """First-order inclusion probabilities of ``ids``."""

    @abstractmethod
    def pi_joint(self, ids: np.ndarray) -> np.ndarray:
        """Matrix of second-order inclusion probabilities, ``pi_ii = pi_i`` on the diagonal."""

    def delta(self, ids: np.ndarray) -> np.ndarray:
        p = self.pi(ids)
        return self.pi_joint(ids) - np.outer(p, p)

    def cond_bias_matrix(self, ids: np.ndarray) -> np.ndarray:
        """Coefficients ``Delta_ik / (pi_k pi_ik)`` of the sample conditional-bias estimator."""
        p = self.pi(ids)
        pij = self.pi_joint(ids)
        with np.errstate(divide="ignore", invalid="ignore"):
            c = self.delta(ids) / (pij * p[None, :])
        # pi_ik = 0 only happens for pairs that never co-occur in a sample.
        c[pij == 0] = 0.0
        return c


@dataclass(frozen=True)
class SrsworDesign(FixedSizeDesign):
    """Simple random sampling without replacement of ``n`` units out of ``N``."""

    N: int
    n: int

    def __post_init__(self):
        if self.N < 1 or self.n < 1 or self.n > self.N:
            raise InvalidDesignError(f"need 1 <= n <= N, got n={self.n}, N={self.N}")

    @property
    def inclusion(self) -> float:
        return self.n / self.N

    @property
    def joint_inclusion(self) -> float:
        if self.N == 1:
            return 1.0
        return self.n * (self.n - 1) / (self.N * (self.N - 1))

    @property
    def weight(self) -> float:
        return self.N / self.n

    def pi(self, ids):
        return np.full(len(ids), self.inclusion)

    def pi_joint(self, ids):
        m = len(ids)
        out = np.full((m, m), self.joint_inclusion)
        np.fill_diagonal(out, self.inclusion)
        return out

    def cond_bias_estimates(self, values: np.ndarray) -> np.ndarray:
        """Closed-form SRSWOR evaluation of the sample conditional-bias estimator.

        Equals ``cond_bias_matrix(ids) @ values`` for a full sample of size n.
        """
        values = np.asarray(values, dtype=float)
        n, N = self.n, self.N
        if n == 1:
            return (N - n) / n * values
        others = (values.sum() - values) / (n - 1)
        return (N - n) / n * (values - others)


@dataclass(frozen=True)
class Sample:
    """A realised sample: member ids (population indices) and the design."""

    ids: np.ndarray
    design: FixedSizeDesign

    def __post_init__(self):
        ids = np.asarray(self.ids, dtype=np.int64)
        if len(ids) != self.design.n:
            raise InvalidDesignError(f"sample has {len(ids)} members, design says n={self.design.n}")
        if len(np.unique(ids)) != len(ids):
            raise InvalidDesignError("sample ids are not distinct")
        object.__setattr__(self, "ids", ids)

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def weights(self) -> np.ndarray:
        return 1.0 / self.design.pi(self.ids)

    def position(self, unit_id: int) -> int:
        hits = np.flatnonzero(self.ids == unit_id)
        if hits.size == 0:
            raise NotInSampleError(f"unit {unit_id} is not in the sample")
        return int(hits[0])


def draw_srswor_ids(N: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Partial Fisher-Yates shuffle returning ``n`` distinct indices from ``range(N)``.

    Only the touched positions are stored, so the cost is O(n).
    """
    if n < 1 or n > N:
        raise InvalidDesignError(f"need 1 <= n <= N, got n={n}, N={N}")
    swapped: dict[int, int] = {}
    out = np.empty(n, dtype=np.int64)
    picks = rng.integers(np.arange(n), N)
    for j in range(n):
        k = int(picks[j])
        out[j] = swapped.get(k, k)
        swapped[k] = swapped.get(j, j)
    return out


def draw_srswor(pop: FinitePopulation | int, n: int, rng: np.random.Generator) -> Sample:
    N = pop if isinstance(pop, int) else pop.N
    design = SrsworDesign(N, n)
    return Sample(draw_srswor_ids(N, n, rng), design)


def ht_total(sample: Sample, values) -> float:
    """Horvitz-Thompson total of per-member ``values``."""
    values = np.asarray(values, dtype=float)
    if values.shape != (sample.n,):
        raise ValueError(f"expected {sample.n} values, got shape {values.shape}")
    if np.isnan(values).any():
        raise IncompleteDataError("missing value among sample members")
    return float(sample.weights @ values)


def cond_bias_ht_population(design: FixedSizeDesign, y_pop, i: int) -> float:
    """Population conditional bias of the HT total for unit ``i`` (Delta-sum form)."""
    y_pop = np.asarray(y_pop, dtype=float)
    ids = np.arange(design.N)
    if not 0 <= i < design.N:
        raise NotInSampleError(f"unit {i} is not in the population")
    p = design.pi(ids)
    row = design.delta(ids)[i]
    return float(np.sum(row / (p[i] * p) * y_pop))


def srswor_cond_bias_closed_form(design: SrsworDesign, y_pop) -> np.ndarray:
    """``((N-n)/n) (N/(N-1)) (y_i - mean(y))`` for every population unit."""
    y_pop = np.asarray(y_pop, dtype=float)
    N, n = design.N, design.n
    if N == 1:
        return np.zeros_like(y_pop)
    return (N - n) / n * N / (N - 1) * (y_pop - y_pop.mean())


def est_cond_bias_ht(sample: Sample, values, i: int | None = None):
    """Estimated conditional bias of the HT total.

    Returns one value per sample member, or the value for population unit ``i``
    when given.
    """
    values = np.asarray(values, dtype=float)
    if np.isnan(values).any():
        raise IncompleteDataError("missing value among sample members")
    if isinstance(sample.design, SrsworDesign):
        b = sample.design.cond_bias_estimates(values)
    else:
        b = sample.design.cond_bias_matrix(sample.ids) @ values
    if i is None:
        return b
    return float(b[sample.position(i)])


def robust_ht(sample: Sample, values) -> float:
    """HT total shifted by minus the midrange of the estimated conditional biases."""
    b = est_cond_bias_ht(sample, values)
    return ht_total(sample, values) - 0.5 * (b.min() + b.max())
