"""Ergodic statistics: weighted averages of a scalar sequence.

An ergodic statistic of (x_k) is a weighted average
``xbar_n = sum_{k<=n} w_{n,k} x_k`` with non-negative weights summing to
one; the non-ergodic statistic is the last iterate itself.  The weight
families implemented here are the ones that appear in convergence
statements for stochastic optimizers: uniform, power-weighted k^alpha,
step-size-weighted, the prefix-minimum selector and a fixed-index
selector.

When every weight w_{n,k} vanishes as n grows, convergence of the last
iterate forces convergence of the averages to the same limit;
``prop1_audit`` checks that transfer numerically on a concrete series.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .schedules import PLStep, PowerEta, ScheduleSpec, Tabulated, schedule_values

__all__ = [
    "Uniform",
    "PowerWeight",
    "StepWeighted",
    "MinimumSelector",
    "IndexSelector",
    "weights",
    "ergodic_average",
    "last_iterate",
    "prop1_audit",
    "Prop1Report",
    "series_from_trajectory_csv",
]


def series_from_trajectory_csv(path, column: str) -> np.ndarray:
    """Load one column of a persisted trajectory CSV as a value series."""
    import csv

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if column not in (reader.fieldnames or []):
            raise KeyError(f"column {column!r} not in {reader.fieldnames}")
        return np.array([float(row[column]) for row in reader])


@dataclass(frozen=True)
class Uniform:
    pass


@dataclass(frozen=True)
class PowerWeight:
    """w_{n,k} proportional to k**alpha, alpha >= 0."""

    alpha: float = 0.0

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")


@dataclass(frozen=True)
class StepWeighted:
    """w_{n,k} proportional to eta_k for a step-size schedule."""

    eta: ScheduleSpec


@dataclass(frozen=True)
class MinimumSelector:
    """All weight on the index minimising the values seen so far."""


@dataclass(frozen=True)
class IndexSelector:
    """All weight on a fixed index tau (1-based)."""

    tau: int

    def __post_init__(self):
        if self.tau < 1:
            raise ValueError("tau must be >= 1")


WeightScheme = Union[Uniform, PowerWeight, StepWeighted, MinimumSelector, IndexSelector]


def weights(scheme: WeightScheme, n: int, values=None) -> np.ndarray:
    """Weight vector of length n, renormalised to sum to one exactly."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if isinstance(scheme, Uniform):
        w = np.full(n, 1.0 / n)
    elif isinstance(scheme, PowerWeight):
        w = np.arange(1, n + 1, dtype=float) ** scheme.alpha
    elif isinstance(scheme, StepWeighted):
        w = schedule_values(scheme.eta, n)
        if np.any(w <= 0):
            raise ValueError("step-weighted scheme needs strictly positive eta")
    elif isinstance(scheme, MinimumSelector):
        if values is None:
            raise ValueError("MinimumSelector weights need the value sequence")
        vals = np.asarray(values, dtype=float)
        if len(vals) < n:
            raise IndexError(f"need {n} values, got {len(vals)}")
        w = np.zeros(n)
        w[int(np.argmin(vals[:n]))] = 1.0
        return w
    elif isinstance(scheme, IndexSelector):
        if scheme.tau > n:
            raise IndexError(f"selector index {scheme.tau} exceeds n={n}")
        w = np.zeros(n)
        w[scheme.tau - 1] = 1.0
        return w
    else:
        raise TypeError(f"unknown weight scheme {scheme!r}")
    return w / w.sum()


def ergodic_average(values, scheme: WeightScheme, n: int) -> float:
    """xbar_n under the scheme; the selectors short-circuit exactly."""
    vals = np.asarray(values, dtype=float)
    if n < 1:
        raise ValueError("n must be >= 1")
    if len(vals) < n:
        raise IndexError(f"need {n} values, got {len(vals)}")
    if isinstance(scheme, MinimumSelector):
        return float(np.min(vals[:n]))
    if isinstance(scheme, IndexSelector):
        if scheme.tau > n:
            raise IndexError(f"selector index {scheme.tau} exceeds n={n}")
        return float(vals[scheme.tau - 1])
    if isinstance(scheme, Uniform):
        # plain sum/n keeps integer-valued sums exact
        return float(np.sum(vals[:n]) / n)
    return float(np.dot(weights(scheme, n), vals[:n]))


def last_iterate(values, n: int) -> float:
    """The non-ergodic statistic: the n-th value itself."""
    vals = np.asarray(values, dtype=float)
    if n < 1:
        raise ValueError("n must be >= 1")
    if len(vals) < n:
        raise IndexError(f"need {n} values, got {len(vals)}")
    return float(vals[n - 1])


# ---------------------------------------------------------------------------
# numeric audit of the averaging transfer
# ---------------------------------------------------------------------------

@dataclass
class Prop1Report:
    """Per-n max weights and average-vs-tail gaps, plus the audit verdict.

    ``passed`` is None when the value sequence never stabilises (no limit
    to transfer, so nothing is asserted).
    """

    n_grid: list
    max_weights: list
    averages: list
    gaps: list
    tail_stabilized: bool
    limit_estimate: Optional[float]
    max_weight_decreasing: bool
    passed: Optional[bool]
    note: str = ""

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True, indent=1)


def _series_diverges(eta: ScheduleSpec) -> bool:
    if isinstance(eta, PowerEta):
        return eta.exponent <= 1.0
    if isinstance(eta, PLStep):
        return True  # harmonic
    return False


def prop1_audit(values, scheme: WeightScheme, n_grid,
                stab_rel_tol: float = 1e-6, gap_decay: float = 0.5) -> Prop1Report:
    """Check that averages track the last-iterate limit when one exists.

    Only schemes whose weights vanish pointwise qualify: uniform, power
    weights, and step weights with a divergent step-size series.  The
    value tail is declared stable when the spread over the last 10% of
    indices is below ``stab_rel_tol`` relative to its scale; the audit
    then requires the average-to-limit gap to shrink by ``gap_decay``
    from the first grid point to the last.
    """
    if isinstance(scheme, (MinimumSelector, IndexSelector)):
        raise ValueError("selector schemes concentrate weight: hypothesis fails")
    if isinstance(scheme, StepWeighted):
        if isinstance(scheme.eta, Tabulated):
            raise ValueError(
                "cannot decide sum(eta) = infinity for a tabulated schedule; refusing"
            )
        if not _series_diverges(scheme.eta):
            raise ValueError(
                "step-weighted scheme with summable eta: max weight need not vanish"
            )
    vals = np.asarray(values, dtype=float)
    n_grid = sorted(int(n) for n in n_grid)
    if n_grid[0] < 1 or n_grid[-1] > len(vals):
        raise IndexError("n grid outside the value sequence")

    max_w, avgs, gaps = [], [], []
    n_max = n_grid[-1]
    tail = vals[max(0, n_max - max(1, n_max // 10)):n_max]
    scale = max(float(np.max(np.abs(tail))), 1e-300)
    spread = float(np.max(tail) - np.min(tail))
    stabilized = spread <= stab_rel_tol * scale
    limit_est = float(vals[n_max - 1])

    for n in n_grid:
        max_w.append(float(np.max(weights(scheme, n))))
        avg = ergodic_average(vals, scheme, n)
        avgs.append(avg)
        gaps.append(abs(avg - limit_est))

    decreasing = all(b <= a * (1 + 1e-12) for a, b in zip(max_w, max_w[1:]))
    if stabilized:
        passed = gaps[-1] <= gap_decay * gaps[0] or gaps[-1] <= stab_rel_tol * scale
        note = "tail stable; averages must approach the same value"
    else:
        passed = None
        note = "non-ergodic limit absent; no assertion on the averages"
    return Prop1Report(
        n_grid=n_grid, max_weights=max_w, averages=avgs, gaps=gaps,
        tail_stabilized=stabilized,
        limit_estimate=limit_est if stabilized else None,
        max_weight_decreasing=decreasing, passed=passed, note=note,
    )
