"""Command-line interface.

Subcommands:

    run <config.json>            execute an experiment config
    check-schedule <config.json> print SC-Adam / SC-Zou verdicts
    audit <run-dir>              re-verify a persisted run (pointwise
                                 inequalities + statistics recomputation)
    rates <run-dir>              fitted decay exponents and, when the
                                 schedule qualifies, the per-seed
                                 almost-sure rate diagnostic
    lemmas                       brute-force the inequality suites
    report <run-dir> --format csv|json|table

Exit codes: 0 all verdicts pass, 1 any failed verdict, 2 validation or
usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import (
    audit_trajectory,
    gamma_products,
    geom_double_sum_check,
    recursion_unroll_check,
)
from .harness.config import ExperimentConfig
from .harness.diagnostics import as_rate_diagnostic, nonergodic_diagnostic
from .harness.experiment import (
    ScheduleGateError,
    _build_problem,
    load_probes,
    load_run,
    run_experiment,
)
from .harness.reporting import _constants_args_from_run, rate_table, report, series_rates
from .optimizer import run as run_trajectory
from .optimizer import default_start
from .problems import NoiseModel
from .schedules import all_pass, check_sc_adam, check_sc_zou

VALIDATION_ERRORS = (ValueError, KeyError, IndexError, FileNotFoundError,
                     json.JSONDecodeError, NotADirectoryError)


def _print_verdicts(tag, verdicts):
    for v in verdicts:
        d = v if isinstance(v, dict) else v.to_dict()
        status = "pass" if d["passed"] else "FAIL"
        print(f"  {tag} {d['condition_id']:>3}: {status:<4} [{d['mode']}]"
              + (f" witness={json.dumps(d['witness'])}" if d["witness"] else ""))


def cmd_run(args) -> int:
    config = ExperimentConfig.from_file(args.config)
    try:
        result = run_experiment(config)
    except ScheduleGateError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 2
    print(f"run written to {result.output_dir}")
    print("SC-Adam verdicts:")
    _print_verdicts("", result.sc_adam)
    failed = False
    for name, s in result.series.items():
        if s.verdict is not None:
            ok = all(s.verdict)
            failed |= not ok
            print(f"  bound check {name}: {'pass at all K' if ok else 'FAIL'}")
    if result.box_violations:
        print(f"  INVALID: trajectories left the certification box: "
              f"{result.box_violations}")
        failed = True
    return 1 if failed else 0


def cmd_check_schedule(args) -> int:
    config = ExperimentConfig.from_file(args.config)
    problem = _build_problem(config)
    hp = config.resolve_hyperparams(problem)
    horizon = max(100, min(config.iterations, 100_000))
    adam = check_sc_adam(hp, horizon=horizon)
    zou = check_sc_zou(hp, horizon=horizon)
    print("SC-Adam:")
    _print_verdicts("", adam)
    print("SC-Zou:")
    _print_verdicts("", zou)
    if args.json_out:
        payload = {"sc_adam": [v.to_dict() for v in adam],
                   "sc_zou": [v.to_dict() for v in zou]}
        Path(args.json_out).write_text(
            json.dumps(payload, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    return 0 if all_pass(adam) else 1


def cmd_audit(args) -> int:
    result = load_run(args.run_dir)
    config = result.config
    problem = _build_problem(config)
    hp = config.resolve_hyperparams(problem)
    noise = NoiseModel(config.noise_kind, config.sigma)
    x1 = (np.asarray(config.x1, dtype=float) if config.x1 is not None
          else default_start(problem))

    seeds = config.seeds if args.all_seeds else config.seeds[:args.max_seeds]
    ok = True
    for seed in seeds:
        traj = run_trajectory(problem, hp, seed=seed, iterations=config.iterations,
                              thinning=config.thinning, noise=noise, x1=x1,
                              audit=True)
        rep = audit_trajectory(traj, problem, hp)
        status = "pass" if rep.passed else "FAIL"
        print(f"  seed {seed}: {rep.checks_run} pointwise checks, "
              f"{len(rep.violations)} violations -> {status}")
        ok &= rep.passed

    # dominance verdicts must agree with a recomputation from the
    # persisted per-seed statistics
    probes = load_probes(result.output_dir)
    for name, s in result.series.items():
        if name == "uniform_output":
            grid = np.array(s.ks, dtype=float)
            per_seed = np.stack([probes[sd]["sum_gradsq"] for sd in config.seeds])
            recomputed = (per_seed / grid[None, :]).mean(axis=0)
            match = np.allclose(recomputed, s.mean, rtol=1e-12, atol=0)
            print(f"  recomputed uniform_output matches stats file: {match}")
            ok &= bool(match)
        if name == "last_iterate":
            per_seed = np.stack([probes[sd]["grad_norm"] for sd in config.seeds])
            match = np.allclose(per_seed.mean(axis=0), s.mean, rtol=1e-12, atol=0)
            print(f"  recomputed last_iterate matches stats file: {match}")
            ok &= bool(match)
    return 0 if ok else 1


def cmd_rates(args) -> int:
    result = load_run(args.run_dir)
    payload = {"series_rates": series_rates(result),
               "bound_rate_table": rate_table(_constants_args_from_run(result))}
    code = 0
    try:
        as_rate = as_rate_diagnostic(result, min_fraction=args.min_fraction)
        payload["as_rate"] = as_rate.to_dict()
        passed = as_rate.decreasing_fraction >= args.min_fraction
        payload["as_rate"]["passed"] = passed
        print(f"almost-sure diagnostic: {as_rate.decreasing_fraction:.0%} of "
              f"{as_rate.seeds_total} seeds decreasing -> "
              f"{'pass' if passed else 'FAIL'}")
        code = 0 if passed else 1
    except ValueError as exc:
        payload["as_rate"] = {"skipped": str(exc)}
        print(f"almost-sure diagnostic skipped: {exc}")
    try:
        trend = nonergodic_diagnostic(result, rho=args.rho)
        payload["last_iterate_trend"] = trend.to_dict()
        print(f"last-iterate trend: grad ratio {trend.grad_ratio:.3g} "
              f"(rho={args.rho}) -> {'pass' if trend.passed else 'FAIL'}")
        code = max(code, 0 if trend.passed else 1)
    except ValueError as exc:
        payload["last_iterate_trend"] = {"skipped": str(exc)}
        print(f"last-iterate trend skipped: {exc}")
    out = Path(args.run_dir) / "reports" / "rates.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n",
                   encoding="utf-8")
    print(f"rates written to {out}")
    return code


def cmd_lemmas(args) -> int:
    rng = np.random.default_rng(args.seed)
    n = args.instances
    bad_sum = 0
    for _ in range(n):
        beta = float(rng.uniform(0.0, 0.99))
        K = int(rng.integers(1, 201))
        b = rng.uniform(0.0, 10.0, K)
        *_, holds = geom_double_sum_check(beta, b)
        bad_sum += not holds
    print(f"double-sum inequalities: {n} instances, {bad_sum} violations")

    bad_rec = 0
    for _ in range(n):
        K = int(rng.integers(1, 201))
        gamma = rng.uniform(1e-6, 1.0 - 1e-9, K)
        gamma[0] = float(rng.uniform(1e-6, 1.0))
        b = rng.uniform(0.0, 5.0, K)
        delta1 = float(rng.uniform(0.0, 10.0))
        _, _, holds = recursion_unroll_check(gamma, delta1, b)
        bad_rec += not holds
    print(f"recursion unrolling: {n} instances, {bad_rec} violations")

    k = np.arange(1, args.gamma_k + 1)
    gam = gamma_products(2.0 / (k + 1.0))
    exact = 2.0 / (k * (k + 1.0))
    worst = float(np.max(np.abs(gam - exact) / exact))
    ok_gamma = worst < 1e-12
    print(f"product closed form 2/(k(k+1)) up to k={args.gamma_k}: "
          f"max rel err {worst:.3e} -> {'pass' if ok_gamma else 'FAIL'}")

    ok = bad_sum == 0 and bad_rec == 0 and ok_gamma
    return 0 if ok else 1


def cmd_report(args) -> int:
    result = load_run(args.run_dir)
    written = report(result, args.format, dest=args.dest)
    for path in written:
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adamlab",
                                     description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute an experiment config")
    p.add_argument("config")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("check-schedule", help="SC-Adam / SC-Zou verdicts")
    p.add_argument("config")
    p.add_argument("--json-out", default=None)
    p.set_defaults(func=cmd_check_schedule)

    p = sub.add_parser("audit", help="re-verify a persisted run")
    p.add_argument("run_dir")
    p.add_argument("--all-seeds", action="store_true")
    p.add_argument("--max-seeds", type=int, default=3)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("rates", help="decay exponents and a.s. diagnostics")
    p.add_argument("run_dir")
    p.add_argument("--min-fraction", type=float, default=0.9)
    p.add_argument("--rho", type=float, default=0.3)
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("lemmas", help="brute-force the inequality suites")
    p.add_argument("--instances", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gamma-k", type=int, default=10_000)
    p.set_defaults(func=cmd_lemmas)

    p = sub.add_parser("report", help="emit csv/json/table reports")
    p.add_argument("run_dir")
    p.add_argument("--format", required=True, choices=REPORT_CHOICES)
    p.add_argument("--dest", default=None)
    p.set_defaults(func=cmd_report)

    return parser


REPORT_CHOICES = ("csv", "json", "table")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
