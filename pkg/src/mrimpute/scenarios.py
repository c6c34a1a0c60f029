"""Catalog of the simulation scenarios with their reference values.

Each reference triple is ``(RB of t_MR, RB of the robust total, RE)`` in percent.
Scenario kinds:

``single``
    one correct imputation model, no nonresponse model
``mp``, ``mP``, ``Mp``
    one imputation and one nonresponse model; a lowercase letter marks the
    correctly specified model, uppercase the misspecified one
    (``mP``: imputation correct, nonresponse misspecified)
``two``
    a correct and a misspecified imputation model, no nonresponse model
"""

from __future__ import annotations

from .harness import CORRECT_TERMS, MISSPECIFIED_TERMS, ModelEntry, ScenarioConfig
from .simgen import PopulationSpec

N_POP = 5000

SINGLE = {
    ("normal", (10, 10, 10)): {50: (0.2, -0.1, 103), 100: (0.1, -0.1, 101)},
    ("gamma", (1, 0.05, 0.05)): {50: (-0.3, -22.9, 67), 100: (-0.4, -17.4, 76)},
    ("gamma", (1, 0.2, 0.2)): {50: (0.2, -10.1, 82), 100: (0.3, -7.1, 86)},
    ("gamma", (1, 1, 0.4)): {50: (-0.0, -3.7, 94), 100: (-0.1, -2.6, 96)},
    ("lognormal", (1, 0.2, 0.1)): {50: (-0.3, -9.7, 67), 100: (-0.2, -7.2, 72)},
    ("lognormal", (1, 0.3, 0.2)): {50: (0.2, -6.2, 75), 100: (0.1, -4.5, 80)},
    ("lognormal", (1, 2.3, 0.2)): {50: (0.1, -1.8, 94), 100: (0.1, -1.3, 94)},
    ("pareto", (1, 0.1, 0.1)): {50: (-0.1, -4.7, 57), 100: (0.2, -3.4, 57)},
    ("pareto", (1, 0.2, 0.2)): {50: (0.0, -4.0, 59), 100: (0.0, -2.9, 70)},
    ("pareto", (1, 1.5, 0.5)): {50: (-0.3, -2.0, 92), 100: (0.0, -1.2, 92)},
}

DOUBLY_ROBUST = {
    ("normal", (10, 10, 10)): {
        "mp": {50: (0.1, -0.3, 103), 100: (-0.1, -0.3, 101)},
        "mP": {50: (-0.1, -0.4, 103), 100: (-0.0, -0.2, 102)},
        "Mp": {50: (2.2, 1.9, 101), 100: (2.2, 2.0, 100)},
    },
    ("gamma", (1, 0.05, 0.05)): {
        "mp": {50: (0.6, -21.7, 68), 100: (-0.2, -17.4, 76)},
        "mP": {50: (0.2, -21.8, 69), 100: (-0.3, -17.0, 78)},
        "Mp": {50: (0.1, -21.4, 72), 100: (1.2, -15.5, 78)},
    },
    ("gamma", (1, 0.2, 0.2)): {
        "mp": {50: (-0.1, -10.3, 83), 100: (0.1, -7.2, 86)},
        "mP": {50: (0.4, -9.6, 83), 100: (0.6, -6.5, 86)},
        "Mp": {50: (2.1, -7.8, 82), 100: (2.2, -5.0, 83)},
    },
    ("gamma", (1, 1, 0.4)): {
        "mp": {50: (-0.2, -3.7, 94), 100: (-0.1, -2.6, 95)},
        "mP": {50: (0.2, -3.4, 95), 100: (0.0, -2.5, 95)},
        "Mp": {50: (1.1, -2.3, 92), 100: (1.7, -0.7, 90)},
    },
    ("lognormal", (1, 0.2, 0.1)): {
        "mp": {50: (0.6, -8.7, 64), 100: (0.1, -7.0, 68)},
        "mP": {50: (0.2, -9.1, 68), 100: (-0.0, -6.9, 71)},
        "Mp": {50: (0.5, -8.3, 70), 100: (1.1, -5.8, 67)},
    },
    ("lognormal", (1, 0.3, 0.2)): {
        "mp": {50: (0.2, -6.1, 71), 100: (-0.1, -4.6, 79)},
        "mP": {50: (-0.4, -6.6, 79), 100: (0.0, -4.4, 78)},
        "Mp": {50: (1.4, -4.6, 68), 100: (1.7, -2.8, 76)},
    },
    ("lognormal", (1, 2.3, 0.2)): {
        "mp": {50: (0.1, -1.7, 92), 100: (0.1, -1.2, 94)},
        "mP": {50: (0.1, -1.8, 93), 100: (-0.1, -1.4, 95)},
        "Mp": {50: (0.4, -1.4, 92), 100: (0.6, -0.7, 93)},
    },
    ("pareto", (1, 0.1, 0.1)): {
        "mp": {50: (-0.2, -4.7, 56), 100: (-0.1, -3.6, 63)},
        "mP": {50: (0.3, -4.3, 56), 100: (0.1, -3.4, 59)},
        "Mp": {50: (1.0, -3.4, 53), 100: (1.5, -2.1, 53)},
    },
    ("pareto", (1, 0.2, 0.2)): {
        "mp": {50: (0.0, -3.9, 68), 100: (0.1, -2.9, 67)},
        "mP": {50: (0.3, -3.6, 66), 100: (-0.2, -3.1, 77)},
        "Mp": {50: (1.8, -1.9, 67), 100: (1.7, -1.2, 67)},
    },
    ("pareto", (1, 1.5, 0.5)): {
        "mp": {50: (0.0, -1.7, 91), 100: (-0.0, -1.2, 91)},
        "mP": {50: (0.1, -1.6, 92), 100: (-0.0, -1.2, 93)},
        "Mp": {50: (1.3, -0.3, 88), 100: (1.5, 0.3, 88)},
    },
}

TWO_MODELS = {
    ("normal", (10, 10, 10)): {50: (0.0, -0.5, 103), 100: (-0.0, -0.3, 102)},
    ("gamma", (1, 0.05, 0.05)): {50: (0.7, -15.9, 76), 100: (0.9, -11.4, 81)},
    ("gamma", (1, 0.2, 0.2)): {50: (0.1, -7.4, 88), 100: (0.5, -4.5, 90)},
    ("gamma", (1, 1, 0.4)): {50: (0.5, -2.2, 95), 100: (0.3, -1.4, 97)},
    ("lognormal", (1, 0.2, 0.1)): {50: (0.4, -6.9, 75), 100: (0.2, -5.0, 78)},
    ("lognormal", (1, 0.3, 0.2)): {50: (0.5, -4.4, 81), 100: (0.3, -3.1, 86)},
    ("lognormal", (1, 2.3, 0.2)): {50: (0.1, -1.3, 97), 100: (-0.1, -1.1, 98)},
    ("pareto", (1, 0.1, 0.1)): {50: (0.4, -3.3, 63), 100: (0.4, -2.4, 69)},
    ("pareto", (1, 0.2, 0.2)): {50: (0.4, -2.8, 73), 100: (0.1, -2.2, 76)},
    ("pareto", (1, 1.5, 0.5)): {50: (0.2, -1.1, 93), 100: (0.0, -0.9, 92)},
}

KINDS = ("single", "mp", "mP", "Mp", "two")


def models_for(kind: str) -> tuple[tuple[ModelEntry, ...], tuple[ModelEntry, ...]]:
    """``(nonresponse, imputation)`` model lists for a scenario kind."""
    good, bad = ModelEntry(CORRECT_TERMS, True), ModelEntry(MISSPECIFIED_TERMS, False)
    if kind == "single":
        return (), (good,)
    if kind == "two":
        return (), (good, bad)
    if kind in ("mp", "mP", "Mp"):
        imp = good if kind[0] == "m" else bad
        nr = good if kind[1] == "p" else bad
        return (nr,), (imp,)
    raise KeyError(f"unknown scenario kind {kind!r}")


def reference_value(kind: str, distribution: str, beta, n: int):
    key = (distribution, tuple(beta))
    if kind == "single":
        return SINGLE[key][n]
    if kind == "two":
        return TWO_MODELS[key][n]
    return DOUBLY_ROBUST[key][kind][n]


def scenario(kind: str, distribution: str, beta, n: int, R: int = 2000, seed: int = 20240101,
             workers: int = 1, N: int = N_POP) -> ScenarioConfig:
    nr, imp = models_for(kind)
    ref = reference_value(kind, distribution, beta, n)
    b = ",".join(f"{x:g}" for x in beta)
    return ScenarioConfig(
        PopulationSpec(N, distribution, tuple(beta)), n, R, nr, imp, seed=seed, workers=workers,
        name=f"{kind} {distribution}({b}) n={n}",
        reference={"rb_mr": ref[0], "rb_robust": ref[1], "re": ref[2]},
    )


def catalog(kinds=KINDS, R: int = 2000, seed: int = 20240101, workers: int = 1) -> list[ScenarioConfig]:
    out = []
    for kind in kinds:
        table = SINGLE if kind == "single" else TWO_MODELS if kind == "two" else DOUBLY_ROBUST
        for (dist, beta) in table:
            for n in (50, 100):
                out.append(scenario(kind, dist, beta, n, R, seed, workers))
    return out
