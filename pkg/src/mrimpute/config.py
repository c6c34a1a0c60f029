"""TOML scenario files.

A file holds either explicit ``[[scenario]]`` tables, a ``[catalog]`` table
expanding the built-in scenario catalog, or both.  Top-level ``[run]`` sets
defaults (``R``, ``seed``, ``workers`` and estimator switches) that each
scenario may override, plus optional output paths::

    [run]
    R = 2000
    seed = 20240101
    workers = 4
    output = "results.csv"          # JSON sidecar defaults to results.json

    [[scenario]]
    name = "gamma, two models"
    n = 50

    [scenario.population]
    distribution = "gamma"
    beta = [1, 0.05, 0.05]
    N = 5000                        # optional sigma2 overrides the family default

    [[scenario.imputation]]
    terms = ["1", "v1", "v1^2"]

    [[scenario.imputation]]
    terms = ["1", "v1", "v2"]
    correct = false

    [scenario.estimator]
    cond_bias = "taylor"            # or "bootstrap" with bootstrap_M
    calibrate = false
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .harness import ModelEntry, ScenarioConfig
from .models import SuiteSpec, parse_term
from .scenarios import KINDS, catalog
from .simgen import SIM_COVARIATES, PopulationSpec

_RUN_KEYS = {"R", "seed", "workers", "phi", "freeze_population", "output", "diagnostics",
             "cond_bias", "bootstrap_M", "calibrate"}
_SCENARIO_KEYS = {"name", "n", "R", "seed", "workers", "phi", "freeze_population",
                  "population", "nonresponse", "imputation", "estimator"}
_ESTIMATOR_KEYS = {"cond_bias", "bootstrap_M", "calibrate"}


@dataclass
class RunPlan:
    scenarios: list[ScenarioConfig]
    output: Path | None = None
    diagnostics: Path | None = None
    source: Path | None = field(default=None, repr=False)


def load_toml(path) -> dict:
    path = Path(path)
    with open(path, "rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc


def _check_keys(table: dict, allowed: set, where: str) -> None:
    extra = set(table) - allowed
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")


def _int(value, key: str, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: {key} must be an integer, got {value!r}")
    return value


def _models(entries, where: str, covariates=SIM_COVARIATES) -> tuple[ModelEntry, ...]:
    if not isinstance(entries, list):
        raise ConfigError(f"{where}: expected an array of tables")
    out = []
    for i, e in enumerate(entries):
        loc = f"{where}[{i}]"
        if not isinstance(e, dict) or "terms" not in e:
            raise ConfigError(f"{loc}: each model needs a 'terms' list")
        _check_keys(e, {"terms", "correct"}, loc)
        terms = e["terms"]
        if not isinstance(terms, list) or not terms:
            raise ConfigError(f"{loc}: terms must be a non-empty list")
        for t in terms:
            name, _ = parse_term(t)
            if covariates is not None and name is not None and name not in covariates:
                raise ConfigError(f"{loc}: term {t!r} uses unknown covariate; simulated data has {covariates}")
        out.append(ModelEntry(tuple(terms), bool(e.get("correct", True))))
    return tuple(out)


def _population(table, where: str) -> PopulationSpec:
    if not isinstance(table, dict):
        raise ConfigError(f"{where}: missing [population] table")
    _check_keys(table, {"distribution", "beta", "N", "sigma2"}, where)
    for key in ("distribution", "beta"):
        if key not in table:
            raise ConfigError(f"{where}: '{key}' is required")
    beta = table["beta"]
    if not isinstance(beta, list) or len(beta) != 3:
        raise ConfigError(f"{where}: beta must be a list of three numbers")
    return PopulationSpec(
        _int(table.get("N", 5000), "N", where), table["distribution"], tuple(float(b) for b in beta),
        None if table.get("sigma2") is None else float(table["sigma2"]),
    )


def scenario_from_table(table: dict, defaults: dict, index: int = 0) -> ScenarioConfig:
    where = f"scenario[{index}]"
    _check_keys(table, _SCENARIO_KEYS, where)
    if "n" not in table:
        raise ConfigError(f"{where}: 'n' is required")
    merged = {**defaults, **{k: v for k, v in table.items() if k in _RUN_KEYS}}
    est = dict(table.get("estimator", {}))
    _check_keys(est, _ESTIMATOR_KEYS, f"{where}.estimator")
    for k in _ESTIMATOR_KEYS:
        if k not in est and k in defaults:
            est[k] = defaults[k]
    imputation = _models(table.get("imputation", []), f"{where}.imputation")
    if not imputation:
        raise ConfigError(f"{where}: at least one [[scenario.imputation]] model is required")
    return ScenarioConfig(
        population=_population(table.get("population"), f"{where}.population"),
        n=_int(table["n"], "n", where),
        R=_int(merged.get("R", 2000), "R", where),
        nonresponse=_models(table.get("nonresponse", []), f"{where}.nonresponse"),
        imputation=imputation,
        phi=str(merged.get("phi", "w")),
        seed=_int(merged.get("seed", 20240101), "seed", where),
        workers=_int(merged.get("workers", 1), "workers", where),
        freeze_population=bool(merged.get("freeze_population", False)),
        cond_bias=str(est.get("cond_bias", "taylor")),
        bootstrap_M=_int(est.get("bootstrap_M", 200), "bootstrap_M", where),
        calibrate=bool(est.get("calibrate", False)),
        name=str(table.get("name", "")),
    )


def parse_config(doc: dict, base: Path | None = None) -> RunPlan:
    _check_keys(doc, {"run", "scenario", "catalog"}, "config")
    run = doc.get("run", {})
    _check_keys(run, _RUN_KEYS, "run")
    scenarios = [scenario_from_table(t, run, i) for i, t in enumerate(doc.get("scenario", []))]
    if "catalog" in doc:
        cat = doc["catalog"]
        _check_keys(cat, {"kinds"}, "catalog")
        kinds = cat.get("kinds", list(KINDS))
        unknown = [k for k in kinds if k not in KINDS]
        if unknown:
            raise ConfigError(f"catalog: unknown kinds {unknown}; available {list(KINDS)}")
        scenarios += catalog(kinds, R=_int(run.get("R", 2000), "R", "run"),
                             seed=_int(run.get("seed", 20240101), "seed", "run"),
                             workers=_int(run.get("workers", 1), "workers", "run"))
    if not scenarios:
        raise ConfigError("config defines no scenarios")
    base = Path(".") if base is None else base
    out = Path(base, run["output"]) if "output" in run else None
    diag = Path(base, run["diagnostics"]) if "diagnostics" in run else (
        out.with_suffix(".json") if out is not None else None)
    return RunPlan(scenarios, out, diag)


def load_population_spec(doc: dict) -> tuple[PopulationSpec, int]:
    """``(spec, seed)`` from a ``gen`` spec file: top-level ``seed`` and a
    ``[population]`` table."""
    _check_keys(doc, {"seed", "population"}, "spec")
    return _population(doc.get("population"), "population"), _int(doc.get("seed", 0), "seed", "spec")


def load_model_suite(path) -> SuiteSpec:
    """Model file for dataset mode: optional ``phi`` and ``[[nonresponse]]`` /
    ``[[imputation]]`` tables over any CSV predictor columns."""
    doc = load_toml(path)
    _check_keys(doc, {"phi", "nonresponse", "imputation"}, "models")
    nr = _models(doc.get("nonresponse", []), "nonresponse", covariates=None)
    imp = _models(doc.get("imputation", []), "imputation", covariates=None)
    if not imp:
        raise ConfigError("models: at least one [[imputation]] table is required")
    return SuiteSpec.from_terms([m.terms for m in nr], [m.terms for m in imp], doc.get("phi", "w"))


def load_config(path) -> RunPlan:
    path = Path(path)
    plan = parse_config(load_toml(path), path.parent)
    plan.source = path
    return plan
