"""Command line entry point ``mr-impute``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O or
input-file error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import load_config, load_model_suite, load_population_spec, load_toml
from .errors import ConfigError, InputError, MRImputeError, NumericalError
from .models import SuiteSpec

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("mrimpute")


def _terms(text: str) -> tuple[str, ...]:
    terms = tuple(t.strip() for t in text.split(",") if t.strip())
    if not terms:
        raise ConfigError(f"empty predictor list {text!r}")
    return terms


def cmd_run(args) -> int:
    from dataclasses import replace

    from .harness import run_scenario, write_results

    plan = load_config(args.config)
    overrides = {k: v for k, v in (("R", args.R), ("workers", args.workers), ("seed", args.seed)) if v is not None}
    scenarios = [replace(s, **overrides) for s in plan.scenarios] if overrides else plan.scenarios
    out = Path(args.out) if args.out else plan.output or Path("results.csv")
    diag = Path(args.json) if args.json else (plan.diagnostics if not args.out else out.with_suffix(".json"))
    results = []
    for cfg in scenarios:
        res = run_scenario(cfg)
        results.append(res)
        ref = cfg.reference or {}
        extra = "" if not ref else f"  [ref {ref['rb_mr']:g} {ref['rb_robust']:g} {ref['re']:g}]"
        print(f"{res.name:<40} RB {res.rb_mr:7.2f}  RB* {res.rb_robust:7.2f}  RE {res.re:6.1f}"
              f"  failed {res.failed}{extra}", flush=True)
    write_results(results, out, diag)
    print(f"wrote {out}" + (f" and {diag}" if diag else ""))
    return EXIT_OK


def _suite_from_args(args) -> SuiteSpec:
    if args.models:
        return load_model_suite(args.models)
    imp = [_terms(t) for t in (args.imputation or ["1,v1,v1^2"])]
    nr = [_terms(t) for t in (args.nonresponse or [])]
    return SuiteSpec.from_terms(nr, imp, args.phi)


def cmd_impute(args) -> int:
    from .dataset import impute_dataset, read_csv, write_csv

    spec = _suite_from_args(args)
    df = read_csv(args.inp)
    res = impute_dataset(df, spec, N=args.N, calibrate=args.calibrate, bootstrap_M=args.bootstrap,
                         seed=args.seed, workers=args.workers)
    write_csv(res.frame, args.out)
    summary_path = Path(args.summary) if args.summary else Path(args.out).with_suffix(".summary.json")
    summary_path.write_text(json.dumps(res.summary, indent=2))
    print(json.dumps(res.summary, indent=2))
    return EXIT_OK


def cmd_gen(args) -> int:
    from .dataset import population_frame, sample_frame, write_csv

    spec, seed = load_population_spec(load_toml(args.spec))
    if args.seed is not None:
        seed = args.seed
    if args.sample:
        if not 1 <= args.sample <= spec.N:
            raise ConfigError(f"--sample must be between 1 and N={spec.N}")
        df, _ = sample_frame(spec, seed, args.sample)
    else:
        df = population_frame(spec, seed)
    write_csv(df, args.out)
    print(f"wrote {len(df)} rows to {args.out}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    from .dataset import calibrate_frame, read_csv, write_csv

    df = read_csv(args.inp)
    out, summary = calibrate_frame(df, args.target, args.distance, (args.lower, args.upper))
    write_csv(out, args.out)
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mr-impute", description="Multiply robust imputation with "
                                "conditional-bias robustification for survey totals.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run Monte Carlo scenarios from a TOML config")
    run.add_argument("--config", required=True)
    run.add_argument("--out", help="results CSV (overrides the config)")
    run.add_argument("--json", help="diagnostics JSON (default: next to the CSV)")
    run.add_argument("--R", type=int, help="override replicates for every scenario")
    run.add_argument("--workers", type=int, help="override worker processes")
    run.add_argument("--seed", type=int, help="override the master seed")
    run.set_defaults(func=cmd_run)

    imp = sub.add_parser("impute", help="impute a sample CSV (columns id, w, r, y and predictors)")
    imp.add_argument("--in", dest="inp", required=True)
    imp.add_argument("--out", required=True)
    imp.add_argument("--summary", help="summary JSON path (default: <out>.summary.json)")
    imp.add_argument("--imputation", action="append", metavar="TERMS",
                     help="comma-separated predictor terms of one imputation model, e.g. '1,v1,v1^2'; repeatable")
    imp.add_argument("--nonresponse", action="append", metavar="TERMS",
                     help="comma-separated predictor terms of one logistic nonresponse model; repeatable")
    imp.add_argument("--models", help="TOML file with [[imputation]] / [[nonresponse]] tables instead")
    imp.add_argument("--phi", choices=("w", "1"), default="w", help="estimating-equation weights")
    imp.add_argument("--N", type=int, help="population size (required when weights vary)")
    imp.add_argument("--calibrate", action="store_true", help="calibrate imputed values to the robust total")
    imp.add_argument("--bootstrap", type=int, metavar="M", help="also estimate conditional bias by bootstrap")
    imp.add_argument("--seed", type=int, default=20240101)
    imp.add_argument("--workers", type=int, default=1)
    imp.set_defaults(func=cmd_impute)

    gen = sub.add_parser("gen", help="generate a synthetic population (id, v1, v2, y) or a sample of it")
    gen.add_argument("--spec", required=True, help="TOML with seed and a [population] table")
    gen.add_argument("--out", required=True)
    gen.add_argument("--sample", type=int, metavar="n",
                     help="emit an SRSWOR sample with simulated response (id, w, r, y, v1, v2)")
    gen.add_argument("--seed", type=int, help="override the seed in the --spec file")
    gen.set_defaults(func=cmd_gen)

    cal = sub.add_parser("calibrate", help="calibrate imputed values to a target total")
    cal.add_argument("--in", dest="inp", required=True, help="CSV with id, w, r, y, y_star and optional q")
    cal.add_argument("--out", required=True)
    cal.add_argument("--target", type=float, required=True)
    cal.add_argument("--distance", choices=("chi2", "logit"), default="chi2")
    cal.add_argument("--lower", type=float, default=0.5, help="logit distance lower ratio bound")
    cal.add_argument("--upper", type=float, default=2.0, help="logit distance upper ratio bound")
    cal.set_defaults(func=cmd_calibrate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (InputError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except MRImputeError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
