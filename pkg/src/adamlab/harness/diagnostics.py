"""Per-seed trend diagnostics for the almost-sure and last-iterate claims.

Asymptotic statements ("the limit is zero", "the rate is o(1/K^{1-q})
along almost every path") have no finite certificate.  The diagnostics
here use declared finite surrogates:

* almost-sure rate: per seed, Z_K = (min_{k<=K} ||grad f(x^k)||^2) * K^{1-q}
  must trend down -- measured by its log-log slope over the last decade
  and by comparing Z at K and at K/100.
* last-iterate limits: the seed-mean of ||grad f(x^K)|| (and of the
  function gap on PL problems) must decay by a configured factor over
  two decades of K.

Both refuse to run when the schedule fails the hypotheses of the claim
being probed, naming the violated condition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..schedules import ConstantTheta, PLStep, PowerEta, PowerTheta
from .experiment import RunResult, load_probes, load_run

__all__ = ["as_rate_diagnostic", "nonergodic_diagnostic",
           "AsRateReport", "TrendReport"]


def _as_run(run) -> RunResult:
    return run if isinstance(run, RunResult) else load_run(run)


def _probes(run: RunResult) -> dict:
    return load_probes(run.output_dir)


@dataclass
class AsRateReport:
    q: float
    p: float
    k_grid: list
    z_by_seed: dict                 # seed -> list of Z_K over the grid
    slope_by_seed: dict             # log-log slope over the last decade
    decreasing_fraction: float      # fraction of seeds with Z(Kmax) < Z(Kmax/100)
    seeds_total: int

    def to_dict(self) -> dict:
        return {
            "q": self.q, "p": self.p, "k_grid": self.k_grid,
            "z_by_seed": {str(s): v for s, v in self.z_by_seed.items()},
            "slope_by_seed": {str(s): v for s, v in self.slope_by_seed.items()},
            "decreasing_fraction": self.decreasing_fraction,
            "seeds_total": self.seeds_total,
        }


def as_rate_diagnostic(run, min_fraction: float = 0.9) -> AsRateReport:
    """Per-seed audit of the o(1/K^{1-q}) almost-sure rate surrogate.

    Requires eta_k = 1/k^q with 1/2 < q < 1 (so the squared steps are
    summable) and theta_k = 1 - 1/k^p with p > 1 - q.
    """
    run = _as_run(run)
    eta, theta = run.config.schedule_family()
    if not isinstance(eta, PowerEta) or not (0.5 < eta.exponent < 1.0):
        raise ValueError(
            "almost-sure rate diagnostic needs eta = c/k^q with 1/2 < q < 1 "
            "(sum eta_k^2 < infinity)"
        )
    if not isinstance(theta, PowerTheta) or not (theta.exponent > 1.0 - eta.exponent):
        raise ValueError(
            "almost-sure rate diagnostic needs theta = 1 - 1/k^p with p > 1 - q "
            "(sum eta_k (1-theta_k) < infinity)"
        )
    q, p = eta.exponent, theta.exponent

    probes = _probes(run)
    grid = run.manifest["config"].get("k_grid") or sorted(
        int(k) for k in next(iter(probes.values()))["k"])
    grid = [int(k) for k in grid]
    kmax = grid[-1]
    k_lo = max(1, kmax // 100)
    if k_lo not in grid:
        raise ValueError("evaluation grid lacks K_max/100; re-run with the default grid")

    z_by_seed, slope_by_seed = {}, {}
    n_down = 0
    for seed, cols in sorted(probes.items()):
        ks = cols["k"].astype(float)
        z = cols["min_gradsq"] * ks ** (1.0 - q)
        z_by_seed[seed] = [float(v) for v in z]
        decade = ks >= kmax / 10.0
        if np.all(z[decade] > 0) and np.sum(decade) >= 2:
            slope = float(np.polyfit(np.log(ks[decade]), np.log(z[decade]), 1)[0])
        else:
            slope = -math.inf  # the minimum already hit zero
        slope_by_seed[seed] = slope
        z_at = {int(k): float(v) for k, v in zip(cols["k"], z)}
        if z_at[kmax] < z_at[k_lo]:
            n_down += 1

    return AsRateReport(
        q=q, p=p, k_grid=grid, z_by_seed=z_by_seed, slope_by_seed=slope_by_seed,
        decreasing_fraction=n_down / len(probes), seeds_total=len(probes),
    )


@dataclass
class TrendReport:
    k_grid: list
    grad_norm_mean: list
    grad_ratio: float               # value at Kmax over value at Kmax/100
    grad_passed: bool
    f_gap_mean: list = field(default_factory=list)
    gap_ratio: float = math.nan
    gap_passed: bool = True
    rho: float = 0.3

    @property
    def passed(self) -> bool:
        return self.grad_passed and self.gap_passed

    def to_dict(self) -> dict:
        return {
            "k_grid": self.k_grid,
            "grad_norm_mean": self.grad_norm_mean,
            "grad_ratio": self.grad_ratio,
            "grad_passed": self.grad_passed,
            "f_gap_mean": self.f_gap_mean,
            "gap_ratio": None if math.isnan(self.gap_ratio) else self.gap_ratio,
            "gap_passed": self.gap_passed,
            "rho": self.rho,
            "passed": self.passed,
        }


def _series_hypotheses(eta, theta):
    """Name the first violated series condition of the last-iterate claim,
    or return None if all hold (power families only)."""
    if isinstance(eta, PowerEta):
        q = eta.exponent
    elif isinstance(eta, PLStep):
        q = 1.0
    else:
        return "eta family undecidable for series conditions"
    if q > 1.0:
        return "sum eta_k = infinity fails"
    if not (q > 0.5):
        return "sum eta_k^2 < infinity fails"
    if isinstance(theta, PowerTheta):
        if not (q + theta.exponent > 1.0):
            return "sum eta_k (1 - theta_k) < infinity fails"
    elif isinstance(theta, ConstantTheta):
        return "sum eta_k (1 - theta_k) < infinity fails (constant theta)"
    else:
        return "theta family undecidable for series conditions"
    return None


def nonergodic_diagnostic(run, rho: float = 0.3) -> TrendReport:
    """Decade-decay audit of the last-iterate limits.

    Requires the series conditions sum eta = inf, sum eta^2 < inf and
    sum eta (1-theta) < inf (decided analytically for the power
    families); refuses otherwise, naming the violated series.
    """
    run = _as_run(run)
    eta, theta = run.config.schedule_family()
    violated = _series_hypotheses(eta, theta)
    if violated is not None:
        raise ValueError(f"last-iterate hypotheses fail: {violated}")

    probes = _probes(run)
    seeds = sorted(probes)
    ks = probes[seeds[0]]["k"].astype(int)
    grid = [int(k) for k in ks]
    kmax = grid[-1]
    k_lo = max(1, kmax // 100)
    if k_lo not in grid:
        raise ValueError("evaluation grid lacks K_max/100; re-run with the default grid")

    grad = np.stack([probes[s]["grad_norm"] for s in seeds]).mean(axis=0)
    at = {k: float(v) for k, v in zip(grid, grad)}
    grad_ratio = at[kmax] / at[k_lo] if at[k_lo] > 0 else 0.0
    report = TrendReport(
        k_grid=grid, grad_norm_mean=[float(v) for v in grad],
        grad_ratio=grad_ratio, grad_passed=grad_ratio <= rho, rho=rho,
    )
    if run.constants.get("pl_v_hat") is not None:
        gap = np.stack([probes[s]["f_gap"] for s in seeds]).mean(axis=0)
        gat = {k: float(v) for k, v in zip(grid, gap)}
        report.f_gap_mean = [float(v) for v in gap]
        report.gap_ratio = gat[kmax] / gat[k_lo] if gat[k_lo] > 0 else 0.0
        report.gap_passed = report.gap_ratio <= rho
    return report
