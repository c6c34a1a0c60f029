"""Sample-moment oracles shared by the generator tests and the acceptance suite."""

import numpy as np
from scipy import stats

from mrimpute.scenarios import SINGLE
from mrimpute.simgen import (
    DEFAULT_SIGMA2,
    draw_family,
    gamma_params,
    lognormal_params,
    pareto_params,
)

V1_GRID = (0.0, 1.25, 2.5, 3.75, 5.0)


def frozen(distribution, mu, sigma2):
    """scipy distribution with the generator's matched parameters."""
    if distribution == "normal":
        return stats.norm(mu, np.sqrt(sigma2))
    if distribution == "gamma":
        k, theta = gamma_params(mu, sigma2)
        return stats.gamma(k, scale=theta)
    if distribution == "lognormal":
        m, s = lognormal_params(mu, sigma2)
        return stats.lognorm(s, scale=np.exp(m))
    a, xm = pareto_params(mu, sigma2)
    return stats.pareto(a, scale=xm)


def moment_grid():
    """(distribution, mu, sigma2) for every beta row and v1 grid point."""
    out = []
    for dist, beta in SINGLE:
        b0, b1, b2 = beta
        for v in V1_GRID:
            out.append((dist, b0 + b1 * v + b2 * v * v, DEFAULT_SIGMA2[dist]))
    return out


def moment_check(distribution, mu, sigma2, n=1_000_000, seed=0):
    """z-scores of the sample mean and variance against (mu, sigma2).

    The variance z-score uses the exact fourth moment.  When it is infinite
    (Pareto shape <= 4) the sample variance has no standard error, so the law
    itself is checked instead: ``log(X / x_m)`` is exponential with rate equal
    to the shape, and its mean and variance are tested.
    """
    x = draw_family(distribution, np.full(n, mu), sigma2, np.random.default_rng(seed))
    z_mean = (x.mean() - mu) / np.sqrt(sigma2 / n)
    law = frozen(distribution, mu, sigma2)
    excess = float(law.stats(moments="k"))
    if np.isfinite(excess):
        se = sigma2 * np.sqrt((excess + 2.0) / n)
        return z_mean, (x.var(ddof=1) - sigma2) / se, "variance"
    a, xm = pareto_params(mu, sigma2)
    e = np.log(x / xm)
    z_lm = (e.mean() - 1 / a) / (1 / a / np.sqrt(n))
    z_lv = (e.var(ddof=1) - 1 / a ** 2) / np.sqrt(8 / a ** 4 / n)
    return z_mean, max(z_lm, z_lv, key=abs), "log-moments"
