"""Experiment orchestration: seeded Monte-Carlo batches with persisted,
byte-reproducible outputs.

Per seed the optimizer trajectory is written as CSV and the exact prefix
statistics at the evaluation grid as JSON.  Aggregation (in fixed seed
order) produces one CSV per statistic with the header
``K,mean,ci_halfwidth,bound,verdict`` plus a machine-readable
``summary.json``.  Only ``manifest.json`` carries timestamps; every
other emitted file is a pure function of the config, so re-running a
config reproduces them byte for byte.

Statistic estimators, per grid horizon K over S seeds:

* ``min_output``     min over recorded k <= K of the seed-mean of
                     ||grad f(x^k)||^2 (exact when thinning is 1); the
                     confidence half-width is the seed spread at the
                     minimising step.
* ``uniform_output`` seed-mean of (1/K) sum_{k<=K} ||grad f(x^k)||^2,
                     computed from exact running sums.
* ``last_iterate``   seed-mean of ||grad f(x^K)||.
* ``f_gap``          seed-mean of f(x^{K+1}) - f*, the gap after K updates
                     (matching the PL bound's convention).

A dominance verdict compares mean + z * stderr against the bound.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .. import __version__ as _version
from ..bounds import (
    min_output_bound,
    min_output_constants,
    pl_constants,
    pl_gap_bound,
    uniform_output_bound,
    uniform_output_constants,
)
from ..optimizer import default_start, run
from ..problems import NoiseModel, builtin
from ..schedules import (
    PLStep,
    PowerEta,
    all_pass,
    check_sc_adam,
    check_sc_zou,
    schedule_values,
)
from .config import ExperimentConfig

__all__ = ["run_experiment", "load_run", "RunResult", "ScheduleGateError"]


class ScheduleGateError(ValueError):
    """The configured schedule fails SC-Adam and the config does not opt out."""


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def _build_problem(cfg: ExperimentConfig):
    return builtin(cfg.problem_id, dim=cfg.dim, box_radius=cfg.box_radius,
                   sigma=cfg.sigma)


def _seed_payload(cfg_dict: dict, seed: int) -> dict:
    """Run one seed and return everything the aggregator needs.

    Top-level so a process pool can execute it; the problem is rebuilt
    inside the worker (certification is deterministic).
    """
    cfg = ExperimentConfig.from_dict(cfg_dict)
    problem = _build_problem(cfg)
    hp = cfg.resolve_hyperparams(problem)
    noise = NoiseModel(cfg.noise_kind, cfg.sigma)
    x1 = np.asarray(cfg.x1, dtype=float) if cfg.x1 is not None else default_start(problem)
    traj = run(problem, hp, seed=seed, iterations=cfg.iterations,
               thinning=cfg.thinning, noise=noise, x1=x1,
               probe_ks=cfg.grid(), audit=cfg.audit)
    payload = {
        "seed": seed,
        "csv": traj.to_csv(),
        "recorded_ks": traj.recorded_ks.astype(int),
        "rec_gradsq": traj.columns["grad_norm"] ** 2,
        "probes": [p._asdict() for p in traj.probes],
        "first_box_exit": traj.first_box_exit,
        "aborted_at": traj.aborted_at,
    }
    if cfg.audit and traj.aborted_at is None:
        from ..bounds import audit_trajectory
        payload["pointwise_audit"] = audit_trajectory(traj, problem, hp).to_dict()
    return payload


@dataclass
class StatisticSeries:
    name: str
    ks: list
    mean: list
    ci_halfwidth: list
    bound: Optional[list] = None
    verdict: Optional[list] = None

    def to_csv(self) -> str:
        lines = ["K,mean,ci_halfwidth,bound,verdict"]
        for i, k in enumerate(self.ks):
            b = repr(float(self.bound[i])) if self.bound is not None else ""
            v = ("pass" if self.verdict[i] else "fail") if self.verdict is not None else ""
            lines.append(f"{int(k)},{repr(float(self.mean[i]))},"
                         f"{repr(float(self.ci_halfwidth[i]))},{b},{v}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "K": [int(k) for k in self.ks],
            "mean": [float(v) for v in self.mean],
            "ci_halfwidth": [float(v) for v in self.ci_halfwidth],
            "bound": None if self.bound is None else [float(v) for v in self.bound],
            "verdict": None if self.verdict is None else [bool(v) for v in self.verdict],
        }


@dataclass
class RunResult:
    config: ExperimentConfig
    output_dir: Path
    constants: dict
    bound_constants: dict
    series: dict                      # name -> StatisticSeries
    sc_adam: list
    sc_zou: list
    box_violations: list = field(default_factory=list)
    aborted_seeds: list = field(default_factory=list)
    manifest: dict = field(default_factory=dict)
    audit_reports: dict = field(default_factory=dict)

    @property
    def valid(self) -> bool:
        return not self.box_violations and not self.aborted_seeds

    @property
    def all_verdicts_pass(self) -> bool:
        for s in self.series.values():
            if s.verdict is not None and not all(s.verdict):
                return False
        return True


def _theta_c_factors(eta_spec, horizon: int):
    """(c0, c0_tilde) sandwiching eta around a non-increasing sequence."""
    if isinstance(eta_spec, (PowerEta, PLStep)):
        return 1.0, 1.0
    vals = schedule_values(eta_spec, horizon)
    if np.any(vals <= 0):
        raise ValueError("bound evaluation needs strictly positive eta")
    suffix_max = np.maximum.accumulate(vals[::-1])[::-1]
    worst = float(np.max(suffix_max / vals))
    return 1.0 / worst, 1.0


def run_experiment(config: ExperimentConfig, base_dir=None) -> RunResult:
    """Execute the configured Monte-Carlo batch and persist all outputs."""
    out = Path(base_dir) / config.output_dir if base_dir else Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    problem = _build_problem(config)
    hp = config.resolve_hyperparams(problem)
    noise = NoiseModel(config.noise_kind, config.sigma)
    x1 = (np.asarray(config.x1, dtype=float) if config.x1 is not None
          else default_start(problem))
    grid = config.grid()
    K = config.iterations

    horizon = max(min(K, 100_000), 100)
    try:
        sc_adam = check_sc_adam(hp, horizon=horizon)
        sc_zou = check_sc_zou(hp, horizon=horizon)
    except (ValueError, IndexError):
        # degenerate schedules (e.g. a zero-step negative control) have no
        # meaningful condition verdicts
        if not config.allow_nonconvergent:
            raise
        sc_adam, sc_zou = [], []
    if not all_pass(sc_adam) and not config.allow_nonconvergent:
        failed = [v.condition_id for v in sc_adam if not v.passed]
        raise ScheduleGateError(
            f"schedule fails SC-Adam condition(s) {failed}; "
            "set allow_nonconvergent to run it anyway"
        )

    cfg_dict = config.to_dict()
    seeds = list(config.seeds)
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            payloads = list(pool.map(_seed_payload, [cfg_dict] * len(seeds), seeds))
    else:
        payloads = [_seed_payload(cfg_dict, s) for s in seeds]

    # persist per-seed artifacts in seed order
    probe_paths, traj_paths = [], []
    for p in payloads:
        tpath = out / "trajectories" / f"seed_{p['seed']}.csv"
        _atomic_write(tpath, p["csv"])
        traj_paths.append(str(tpath.relative_to(out)))
        ppath = out / "probes" / f"seed_{p['seed']}.json"
        _atomic_write(ppath, _dump_json({"seed": p["seed"], "probes": p["probes"]}))
        probe_paths.append(str(ppath.relative_to(out)))

    box_violations = [{"seed": p["seed"], "first_exit_k": p["first_box_exit"]}
                      for p in payloads if p["first_box_exit"] is not None]
    aborted = [{"seed": p["seed"], "aborted_at": p["aborted_at"]}
               for p in payloads if p["aborted_at"] is not None]
    if aborted:
        raise RuntimeError(f"non-finite iterates in seeds {aborted}")

    series = _aggregate(config, problem, hp, grid, payloads, x1)

    for s in series.values():
        _atomic_write(out / "stats" / f"{s.name}.csv", s.to_csv())

    constants = problem.constants_dict()
    bound_constants = _bound_constants_dict(config, problem, hp, x1)
    audit_reports = {p["seed"]: p["pointwise_audit"] for p in payloads
                     if "pointwise_audit" in p}
    summary = {
        "config_hash": config.config_hash(),
        "problem_constants": constants,
        "bound_constants": bound_constants,
        "sc_adam": [v.to_dict() for v in sc_adam],
        "sc_zou": [v.to_dict() for v in sc_zou],
        "statistics": {name: s.to_dict() for name, s in series.items()},
        "box_violations": box_violations,
        "k_grid": grid,
        "pointwise_audit": {str(s): r for s, r in audit_reports.items()} or None,
    }
    _atomic_write(out / "summary.json", _dump_json(summary))

    manifest = {
        "config": cfg_dict,
        "config_hash": config.config_hash(),
        "tool_version": _version,
        "problem_constants": constants,
        "trajectory_files": traj_paths,
        "probe_files": probe_paths,
        "statistics_files": [f"stats/{name}.csv" for name in series],
        "created_unix_time": time.time(),
    }
    _atomic_write(out / "manifest.json", _dump_json(manifest))

    return RunResult(
        config=config, output_dir=out, constants=constants,
        bound_constants=bound_constants, series=series,
        sc_adam=sc_adam, sc_zou=sc_zou,
        box_violations=box_violations, aborted_seeds=aborted,
        manifest=manifest, audit_reports=audit_reports,
    )


def _bound_constants_dict(config, problem, hp, x1) -> dict:
    out = {}
    checks = set(config.bound_checks)
    if not checks:
        return out
    f1_gap = problem.f_gap(np.asarray(x1, dtype=float))
    m = problem.m_bound
    if {"min_output", "uniform_output"} & checks:
        c0, c0t = _theta_c_factors(hp.eta, min(config.iterations, 100_000))
        args = dict(m_bound=m, epsilon=hp.epsilon, beta=hp.beta_cap,
                    dim=problem.dim, smoothness=problem.L_hat,
                    c0=c0, c0_tilde=c0t, f1_gap=f1_gap)
        if "min_output" in checks:
            out["min_output"] = min_output_constants(**args).to_dict()
        if "uniform_output" in checks:
            out["uniform_output"] = uniform_output_constants(**args).to_dict()
    if "pl_gap" in checks:
        if problem.pl_v_hat is None:
            raise ValueError(f"{problem.id!r} has no certified PL modulus")
        out["pl_gap"] = pl_constants(
            m_bound=m, epsilon=hp.epsilon, beta=hp.beta_cap,
            smoothness=problem.L_hat, pl_modulus=problem.pl_v_hat,
            dim=problem.dim).to_dict()
    return out


def _aggregate(config, problem, hp, grid, payloads, x1) -> dict:
    z = config.confidence_z
    S = len(payloads)
    grid_arr = np.array(grid, dtype=int)

    rec_ks = payloads[0]["recorded_ks"]
    for p in payloads[1:]:
        if not np.array_equal(p["recorded_ks"], rec_ks):
            raise RuntimeError("recorded step grids differ across seeds")
    rec_gradsq = np.stack([p["rec_gradsq"] for p in payloads])  # S x n_rec
    mean_rec = rec_gradsq.mean(axis=0)
    std_rec = rec_gradsq.std(axis=0, ddof=1) if S > 1 else np.zeros_like(mean_rec)

    def probe_col(name):
        cols = []
        for p in payloads:
            by_k = {pr["k"]: pr for pr in p["probes"]}
            cols.append([by_k[k][name] for k in grid])
        return np.array(cols)  # S x len(grid)

    series = {}
    checks = set(config.bound_checks)

    bounds_cache = {}
    if {"min_output", "uniform_output"} & checks:
        f1_gap = problem.f_gap(np.asarray(x1, dtype=float))
        c0, c0t = _theta_c_factors(hp.eta, min(config.iterations, 100_000))
        args = dict(m_bound=problem.m_bound, epsilon=hp.epsilon,
                    beta=hp.beta_cap, dim=problem.dim,
                    smoothness=problem.L_hat, c0=c0, c0_tilde=c0t,
                    f1_gap=f1_gap)
        if "min_output" in checks:
            bounds_cache["min_output"] = min_output_bound(
                min_output_constants(**args), hp.eta, hp.theta, grid_arr)
        if "uniform_output" in checks:
            bounds_cache["uniform_output"] = uniform_output_bound(
                uniform_output_constants(**args), hp.eta, hp.theta, grid_arr)
    if "pl_gap" in checks:
        bounds_cache["f_gap"] = pl_gap_bound(
            pl_constants(m_bound=problem.m_bound, epsilon=hp.epsilon,
                         beta=hp.beta_cap, smoothness=problem.L_hat,
                         pl_modulus=problem.pl_v_hat, dim=problem.dim),
            hp.theta, grid_arr)

    def finish(name, mean, hw, bound_key):
        bound = bounds_cache.get(bound_key)
        verdict = None
        if bound is not None:
            verdict = [bool(m_ + h_ <= b_) for m_, h_, b_ in zip(mean, hw, bound)]
        series[name] = StatisticSeries(
            name=name, ks=list(grid), mean=list(map(float, mean)),
            ci_halfwidth=list(map(float, hw)),
            bound=None if bound is None else list(map(float, bound)),
            verdict=verdict)

    if "min_output" in config.statistics:
        mean, hw = [], []
        for Kg in grid:
            upto = int(np.searchsorted(rec_ks, Kg, side="right"))
            if upto == 0:
                raise RuntimeError("evaluation grid precedes first recorded step")
            j = int(np.argmin(mean_rec[:upto]))
            mean.append(mean_rec[j])
            hw.append(z * std_rec[j] / math.sqrt(S) if S > 1 else 0.0)
        finish("min_output", mean, hw, "min_output")

    if "uniform_output" in config.statistics:
        per_seed = probe_col("sum_gradsq") / grid_arr[None, :]
        mean = per_seed.mean(axis=0)
        sd = per_seed.std(axis=0, ddof=1) if S > 1 else np.zeros_like(mean)
        finish("uniform_output", mean, z * sd / math.sqrt(S) if S > 1 else sd,
               "uniform_output")

    if "last_iterate" in config.statistics:
        per_seed = probe_col("grad_norm")
        mean = per_seed.mean(axis=0)
        sd = per_seed.std(axis=0, ddof=1) if S > 1 else np.zeros_like(mean)
        finish("last_iterate", mean, z * sd / math.sqrt(S) if S > 1 else sd, None)

    if "f_gap" in config.statistics:
        per_seed = probe_col("f_gap_next")
        mean = per_seed.mean(axis=0)
        sd = per_seed.std(axis=0, ddof=1) if S > 1 else np.zeros_like(mean)
        finish("f_gap", mean, z * sd / math.sqrt(S) if S > 1 else sd, "f_gap")

    return series


# ---------------------------------------------------------------------------
# reloading a persisted run
# ---------------------------------------------------------------------------

def load_run(run_dir) -> RunResult:
    """Rebuild a RunResult from a persisted run directory."""
    run_dir = Path(run_dir)
    with open(run_dir / "manifest.json", encoding="utf-8") as fh:
        manifest = json.load(fh)
    with open(run_dir / "summary.json", encoding="utf-8") as fh:
        summary = json.load(fh)
    config = ExperimentConfig.from_dict(manifest["config"])
    series = {}
    for name, d in summary["statistics"].items():
        series[name] = StatisticSeries(
            name=name, ks=d["K"], mean=d["mean"], ci_halfwidth=d["ci_halfwidth"],
            bound=d["bound"], verdict=d["verdict"])
    return RunResult(
        config=config, output_dir=run_dir,
        constants=summary["problem_constants"],
        bound_constants=summary["bound_constants"],
        series=series,
        sc_adam=summary["sc_adam"], sc_zou=summary["sc_zou"],
        box_violations=summary["box_violations"],
        manifest=manifest,
        audit_reports=summary.get("pointwise_audit") or {},
    )


def load_probes(run_dir) -> dict:
    """seed -> {probe field -> np.ndarray over the K grid} from disk."""
    run_dir = Path(run_dir)
    with open(run_dir / "manifest.json", encoding="utf-8") as fh:
        manifest = json.load(fh)
    out = {}
    for rel in manifest["probe_files"]:
        with open(run_dir / rel, encoding="utf-8") as fh:
            blob = json.load(fh)
        probes = blob["probes"]
        out[blob["seed"]] = {
            key: np.array([p[key] for p in probes])
            for key in ("k", "min_gradsq", "sum_gradsq", "grad_norm",
                        "f_gap", "f_gap_next")
        }
    return out
