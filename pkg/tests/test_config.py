"""TOML scenario and model files."""

from pathlib import Path

import pytest

from mrimpute.config import load_config, load_model_suite, load_population_spec, load_toml, parse_config
from mrimpute.errors import ConfigError

CONFIGS = sorted(p for p in (Path(__file__).parents[1] / "configs").glob("*.toml") if p.name != "population.toml")

MINIMAL = {
    "scenario": [{
        "n": 20,
        "population": {"distribution": "gamma", "beta": [1, 0.2, 0.2], "N": 200},
        "imputation": [{"terms": ["1", "v1", "v1^2"]}],
    }]
}


def with_scenario(**kw):
    doc = {"scenario": [{**MINIMAL["scenario"][0], **kw}]}
    return doc


@pytest.mark.parametrize("path", CONFIGS, ids=lambda p: p.name)
def test_shipped_configs_parse(path):
    plan = load_config(path)
    assert plan.scenarios and plan.source == path
    if plan.output is not None:
        assert plan.output.parent == path.parent
        assert plan.diagnostics is not None


def test_shipped_population_spec():
    spec, seed = load_population_spec(load_toml(Path(__file__).parents[1] / "configs" / "population.toml"))
    assert spec.N == 5000 and spec.distribution == "gamma" and isinstance(seed, int)


def test_defaults_and_overrides():
    doc = {"run": {"R": 50, "seed": 9, "calibrate": True}, **with_scenario(R=10, name="x")}
    cfg = parse_config(doc).scenarios[0]
    assert cfg.R == 10 and cfg.seed == 9 and cfg.calibrate and cfg.name == "x"
    assert cfg.population.sigma2 == 50.0 and cfg.phi == "w"


def test_estimator_table():
    doc = with_scenario(estimator={"cond_bias": "bootstrap", "bootstrap_M": 40})
    cfg = parse_config(doc).scenarios[0]
    assert cfg.cond_bias == "bootstrap" and cfg.bootstrap_M == 40


def test_catalog_expansion():
    plan = parse_config({"run": {"R": 3}, "catalog": {"kinds": ["two"]}})
    assert len(plan.scenarios) == 20 and all(s.R == 3 for s in plan.scenarios)
    assert plan.scenarios[0].reference is not None


def test_output_paths(tmp_path):
    plan = parse_config({"run": {"output": "r.csv"}, **MINIMAL}, tmp_path)
    assert plan.output == tmp_path / "r.csv" and plan.diagnostics == tmp_path / "r.json"


@pytest.mark.parametrize("doc", [
    {},
    {"bogus": 1, **MINIMAL},
    {"run": {"Rr": 3}, **MINIMAL},
    with_scenario(colour="red"),
    with_scenario(n="20"),
    with_scenario(R=True),
    with_scenario(imputation=[]),
    with_scenario(imputation=[{"terms": ["1", "v3"]}]),
    with_scenario(imputation=[{"terms": []}]),
    with_scenario(imputation=[{"terms": ["1"], "extra": 1}]),
    with_scenario(imputation=[{"terms": ["1", "v1^x"]}]),
    with_scenario(population={"distribution": "gamma"}),
    with_scenario(population={"distribution": "gamma", "beta": [1, 2]}),
    with_scenario(population={"distribution": "gamma", "beta": [1, -1, 0.1]}),
    with_scenario(estimator={"cond_bias": "other"}),
    with_scenario(n=0),
    {"catalog": {"kinds": ["nope"]}},
], ids=lambda d: repr(d)[:60])
def test_invalid(doc):
    with pytest.raises(ConfigError):
        parse_config(doc)


def test_bad_toml_syntax(tmp_path):
    p = tmp_path / "x.toml"
    p.write_text("[run\nR = 1")
    with pytest.raises(ConfigError):
        load_config(p)


def test_missing_file_is_os_error(tmp_path):
    with pytest.raises(OSError):
        load_config(tmp_path / "absent.toml")


def test_model_suite_file(tmp_path):
    p = tmp_path / "m.toml"
    p.write_text('phi = "1"\n[[nonresponse]]\nterms = ["1", "age"]\n'
                 '[[imputation]]\nterms = ["1", "income", "income^2"]\n')
    spec = load_model_suite(p)
    assert len(spec.nonresponse) == 1 and len(spec.imputation) == 1
    p.write_text('[[nonresponse]]\nterms = ["1"]\n')
    with pytest.raises(ConfigError):
        load_model_suite(p)
