"""Acceptance suite: nine criteria, one PASS/FAIL line each.

Monte Carlo criteria use R=2000 replicates at master seed 20240101 and write
their per-scenario tables to ``acceptance_output/``.  The whole suite takes
five to eight minutes on one core; it parallelises over all available cores.
"""

import os
from itertools import combinations
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import spearmanr

from mrimpute.bootstrap import bootstrap_cond_bias
from mrimpute.calibrate import (
    CalibrationProblem,
    ChiSquare,
    LogitDistance,
    calibrate_chi_square,
    calibrate_general,
)
from mrimpute.condbias import linearized_psi, single_model_psi
from mrimpute.design import (
    Sample,
    SrsworDesign,
    cond_bias_ht_population,
    est_cond_bias_ht,
    ht_total,
    srswor_cond_bias_closed_form,
)
from mrimpute.harness import run_scenario, write_results
from mrimpute.models import SuiteSpec, design_matrix
from mrimpute.pipeline import SurveyData, estimate
from mrimpute.scenarios import DOUBLY_ROBUST, SINGLE, TWO_MODELS, scenario
from mrimpute.simgen import gen_response
from moments import moment_check, moment_grid
from test_condbias import QUAD, fd_influence, fitted, sim_sample

R = 2000
SEED = 20240101
WORKERS = os.cpu_count() or 1
OUT = Path(__file__).parents[1] / "acceptance_output"
RESULTS: dict[int, str] = {}

pytestmark = pytest.mark.acceptance


def report(number, title, ok, detail):
    line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title}; {detail}"
    RESULTS[number] = line
    print(line)
    return ok


def run_table(kind, table):
    configs = []
    for dist, beta in table:
        for n in (50, 100):
            configs.append(scenario(kind, dist, beta, n, R=R, seed=SEED, workers=WORKERS))
    results = [run_scenario(c) for c in configs]
    OUT.mkdir(exist_ok=True)
    write_results(results, OUT / f"{kind}.csv", OUT / f"{kind}.json")
    return results


def describe(res):
    ref = res.reference
    return (f"{res.name} RB {res.rb_mr:.2f} ({ref['rb_mr']:g}) RB* {res.rb_robust:.2f} "
            f"({ref['rb_robust']:g}) RE {res.re:.1f} ({ref['re']:g})")


def test_criterion_1_single_model_table():
    misses = []
    for res in run_table("single", SINGLE):
        ref = res.reference
        re_tol = 4 if res.distribution == "normal" else 10
        if (abs(res.rb_mr - ref["rb_mr"]) > 1.0 or abs(res.rb_robust - ref["rb_robust"]) > 2.5
                or abs(res.re - ref["re"]) > re_tol):
            misses.append(describe(res))
    ok = report(1, "single-model table within (1.0, 2.5, 10/4) of reference", not misses,
                f"{len(misses)} of 20 rows outside: " + "; ".join(misses) if misses else "20 of 20 rows inside")
    assert ok


def test_criterion_2_doubly_robust_tables():
    results = []
    for kind in ("mp", "mP", "Mp"):
        table = {key: val[kind] for key, val in DOUBLY_ROBUST.items()}
        results += run_table(kind, table)
    rb_bad = [describe(r) for r in results if r.name.split()[0] in ("mP", "Mp") and abs(r.rb_mr) > 3.0]
    re_in = sum(abs(r.re - r.reference["re"]) <= 10 for r in results)
    ok = not rb_bad and re_in >= 0.8 * len(results)
    report(2, "doubly robust |RB| <= 3 with one model wrong, RE within 10 on >= 80% of rows", ok,
           f"RE inside on {re_in}/{len(results)} rows; |RB| > 3 on {len(rb_bad)} rows"
           + (": " + "; ".join(rb_bad) if rb_bad else ""))
    assert ok


def test_criterion_3_two_model_table():
    results = run_table("two", TWO_MODELS)
    rb_bad = [describe(r) for r in results if abs(r.rb_mr) > 2.0]
    anchor = next(r for r in results if r.distribution == "pareto" and r.beta == (1, 0.1, 0.1) and r.n == 50)
    anchor_ok = abs(anchor.re - 63) <= 10
    ok = not rb_bad and anchor_ok
    report(3, "two imputation models |RB| <= 2 and pareto(1,0.1,0.1) n=50 RE in 63 +- 10", ok,
           f"pareto anchor RE {anchor.re:.1f}; |RB| > 2 on {len(rb_bad)} rows"
           + (": " + "; ".join(rb_bad) if rb_bad else ""))
    assert ok


def test_criterion_4_enumeration():
    rng = np.random.default_rng(SEED)
    err_mean = err_cu = err_cf = 0.0
    cases = 0
    for N in range(2, 9):
        for _ in range(3):
            y = rng.gamma(0.5, 20.0, N) * rng.choice([-1, 1], N)
            scale = 1.0 + np.abs(y).sum()
            for n in range(1, N + 1):
                d = SrsworDesign(N, n)
                samples = [Sample(np.array(s), d) for s in combinations(range(N), n)]
                err_mean = max(err_mean, abs(np.mean([ht_total(s, y[s.ids]) for s in samples]) - y.sum()) / scale)
                pop_cb = np.array([cond_bias_ht_population(d, y, i) for i in range(N)])
                err_cf = max(err_cf, np.abs(pop_cb - srswor_cond_bias_closed_form(d, y)).max() / scale)
                if n >= 2:  # conditional unbiasedness needs every joint inclusion positive
                    for i in range(N):
                        hits = [est_cond_bias_ht(s, y[s.ids], i) for s in samples if i in s.ids]
                        err_cu = max(err_cu, abs(np.mean(hits) - pop_cb[i]) / scale)
                cases += 1
    ok = err_mean <= 1e-10 and err_cu <= 1e-10 and err_cf <= 1e-12
    report(4, "enumeration oracles on populations with N <= 8", ok,
           f"{cases} designs; max scaled errors: unbiasedness {err_mean:.1e}, "
           f"conditional unbiasedness {err_cu:.1e}, closed form {err_cf:.1e}")
    assert ok


def test_criterion_5_specialisations():
    worst = 0.0
    for seed in range(50):
        data = sim_sample(40 + seed, 1000 + seed, dist="lognormal", beta=(1, 0.3, 0.2))
        _, suite, imp = fitted(data, "single")
        lp = linearized_psi(suite, imp, data.y, data.r, data.weights)
        ex = single_model_psi(design_matrix(QUAD, data.covariates), data.y, data.r, data.weights)
        worst = max(worst, float(np.max(np.abs(lp.psi - ex) / np.abs(ex))))
    exact = True
    rng = np.random.default_rng(SEED)
    for n in (10, 30, 75):
        y = rng.gamma(0.3, 10.0, n)
        data = SurveyData(y, np.ones(n, int), {"v1": rng.uniform(0, 5, n)}, SrsworDesign(20 * n, n))
        est = estimate(data, SuiteSpec.from_terms((), [QUAD]))
        s = Sample(np.arange(n), data.design)
        exact &= est.t_mr == ht_total(s, y)
        exact &= bool(np.array_equal(est.cond_bias.values, est_cond_bias_ht(s, y)))
    ok = worst <= 1e-6 and exact
    report(5, "general influence equals the single-model closed form; full response reduces to HT", ok,
           f"max relative difference {worst:.1e} over 50 instances; full-response exact: {exact}")
    assert ok


def test_criterion_6_influence_oracle():
    worst, where = 0.0, ""
    for i, (dist, beta) in enumerate(SINGLE):
        data = sim_sample(100, SEED + i, dist=dist, beta=beta)
        spec, suite, imp = fitted(data, "single")
        psi = linearized_psi(suite, imp, data.y, data.r, data.weights).psi
        fd = np.array([fd_influence(data, spec, k) for k in range(data.n)])
        # guard against units whose influence is near zero
        rel = np.abs(fd - psi) / np.maximum(np.abs(psi), 1e-3 * np.abs(psi).mean())
        if rel.max() > worst:
            worst, where = float(rel.max()), f"{dist}{beta}"
    ok = worst <= 0.01
    report(6, "linearized influence vs finite-difference weight perturbation at n=100", ok,
           f"max per-unit relative difference {worst:.1e} ({where}) over 10 single-model populations")
    assert ok


def _full_response(n, N, seed):
    rng = np.random.default_rng(seed)
    v1 = rng.uniform(0, 5, n)
    y = 1 + 0.05 * v1 + 0.05 * v1 ** 2 + rng.gamma(0.02, 50.0, n)
    return SurveyData(y, np.ones(n, int), {"v1": v1}, SrsworDesign(N, n))


def test_criterion_7_bootstrap():
    spec = SuiteSpec.from_terms((), [QUAD])
    rho = {}
    pearson = {}
    for n, N in ((6, 60), (20, 200)):
        data = _full_response(n, N, SEED + n)
        boot = bootstrap_cond_bias(data, spec, 4000, seed=SEED, workers=WORKERS)
        taylor = estimate(data, spec).cond_bias.values
        rho[n] = spearmanr(boot.b_hat, taylor).correlation
        pearson[n] = np.corrcoef(boot.b_hat, taylor)[0, 1]
    rng = np.random.default_rng(SEED)
    n = 40
    v1 = rng.uniform(0, 5, n)
    r = gen_response(v1, rng)
    data = SurveyData(np.where(r == 1, 1 + v1 ** 2 + rng.gamma(1, 2, n), np.nan), r, {"v1": v1},
                      SrsworDesign(2000, n))
    runs = [bootstrap_cond_bias(data, spec, 120, seed=7, workers=w) for w in (1, 2, 3)]
    same = all(np.array_equal(a.b_hat, runs[0].b_hat, equal_nan=True)
               and np.array_equal(a.t_star_mr, runs[0].t_star_mr, equal_nan=True) for a in runs)
    # the verdict uses the N=60, n=6 case; n=20 is reported for context only
    ok = rho[6] >= 0.9 and same
    report(7, "bootstrap vs linearized conditional bias rank agreement (N=60, n=6, M=4000) and determinism", ok,
           f"Spearman {rho[6]:.3f}; identical across 1/2/3 workers: {same}; supplementary N=200, n=20: "
           f"Spearman {rho[20]:.3f}, Pearson {pearson[20]:.3f}")
    assert ok


def test_criterion_8_calibration():
    rng = np.random.default_rng(SEED)
    c_err = d_err = i_err = 0.0
    logit_solved = 0
    for _ in range(500):
        m = int(rng.integers(1, 60))
        ys = rng.lognormal(1.0, 1.0, m)
        w = rng.uniform(1, 50, m)
        q = rng.uniform(0.2, 5, m)
        resp = float(rng.uniform(0, 1e4))
        target = resp + (w @ ys) * (1 + rng.uniform(-0.3, 0.3))
        prob = CalibrationProblem(ys, w, target, resp, q)
        scale = 1 + abs(target)
        closed = calibrate_chi_square(prob)
        dual = calibrate_general(prob, ChiSquare())
        logit = calibrate_general(prob, LogitDistance(0.5, 2.0))
        logit_solved += 1
        for sol in (closed, dual, logit):
            c_err = max(c_err, abs(prob.achieved(sol) - target) / scale)
        d_err = max(d_err, float(np.max(np.abs(dual - closed) / np.abs(closed))))
        again = calibrate_chi_square(CalibrationProblem(closed, w, target, resp, q))
        i_err = max(i_err, float(np.max(np.abs(again - closed) / np.abs(closed))))
    ok = c_err <= 1e-10 and d_err <= 1e-8 and i_err <= 1e-12
    report(8, "calibration constraint, closed form vs dual solver, idempotence", ok,
           f"500 problems ({logit_solved} logit); constraint {c_err:.1e}, closed vs dual {d_err:.1e}, "
           f"idempotence {i_err:.1e}")
    assert ok


def test_criterion_9_moments_and_response_rate():
    worst, where, kinds = 0.0, "", set()
    for dist, mu, s2 in dict.fromkeys(moment_grid()):
        z_mean, z_var, kind = moment_check(dist, mu, s2, seed=round(mu * 1000))
        kinds.add(kind)
        if max(abs(z_mean), abs(z_var)) > worst:
            worst, where = max(abs(z_mean), abs(z_var)), f"{dist} mu={mu:g}"
    rng = np.random.default_rng(SEED)
    rate = gen_response(rng.uniform(0, 5, 1_000_000), rng).mean()
    ok = worst < 3 and abs(rate - 0.70) <= 0.01
    report(9, "moment matching at 1e6 draws over the beta grid; response rate 0.70 +- 0.01", ok,
           f"largest |z| {worst:.2f} ({where}); variance checks: {', '.join(sorted(kinds))}; "
           f"response rate {rate:.4f}")
    assert ok
