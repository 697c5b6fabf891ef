"""Experiment configuration: JSON schema, validation, canonical hashing.

A config file fully determines an experiment:

{
  "problem":   {"id": "bounded-nonconvex", "dim": 10, "box_radius": 10.0},
  "noise":     {"kind": "uniform-ball", "sigma": 0.1},
  "hyperparams": {
    "eta":   {"kind": "power_eta", "scale": 1.0, "exponent": 0.5},
    "theta": {"kind": "power_theta", "exponent": 1.0},
    "beta":  {"kind": "constant_beta", "value": 0.9},
    "epsilon": 1.0,
    "beta_cap": 0.9
  },
  "iterations": 100000,
  "seeds": [1, 2, 3],
  "statistics": ["min_output", "uniform_output", "last_iterate", "f_gap"],
  "bound_checks": ["min_output", "uniform_output"],
  "k_grid": null,
  "x1": null,
  "thinning": null,
  "allow_nonconvergent": false,
  "audit": false,
  "workers": 1,
  "output_dir": "runs/example"
}

``eta`` additionally accepts {"kind": "pl_step_certified", "epsilon": ...,
"beta": ...}, which the harness resolves against the problem's certified
constants (M = G_hat + sigma, v = pl_v_hat) before running.

The config hash is a sha256 over the canonical JSON serialisation
(sorted keys, compact separators), so it is stable under field
reordering in the source file.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..problems import BUILTIN_IDS, NoiseModel
from ..schedules import HyperParams, PLStep, spec_from_dict

__all__ = ["ExperimentConfig", "canonical_hash", "default_k_grid"]

STATISTIC_NAMES = ("min_output", "uniform_output", "last_iterate", "f_gap")
BOUND_CHECK_NAMES = ("min_output", "uniform_output", "pl_gap")
ONE_SIDED_95_Z = 1.6448536269514722


def canonical_hash(obj) -> str:
    """sha256 of the canonical JSON form (sorted keys, compact)."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def default_k_grid(iterations: int, points: int = 12) -> list:
    """Geometric grid of horizons that always contains K, K/10 and K/100."""
    ks = np.unique(np.round(np.geomspace(min(10, iterations), iterations,
                                         points)).astype(int))
    must = {iterations, max(1, iterations // 10), max(1, iterations // 100)}
    return sorted(set(int(k) for k in ks) | must)


@dataclass
class ExperimentConfig:
    problem_id: str
    dim: int
    iterations: int
    seeds: list
    hyperparams_raw: dict
    box_radius: Optional[float] = 10.0
    noise_kind: str = "uniform-ball"
    sigma: float = 0.0
    statistics: list = field(default_factory=lambda: list(STATISTIC_NAMES))
    bound_checks: list = field(default_factory=list)
    k_grid: Optional[list] = None
    x1: Optional[list] = None
    thinning: Optional[int] = None
    allow_nonconvergent: bool = False
    audit: bool = False
    workers: int = 1
    output_dir: str = "runs/experiment"
    confidence_z: float = ONE_SIDED_95_Z

    def __post_init__(self):
        if self.problem_id not in BUILTIN_IDS:
            raise KeyError(f"unknown problem id {self.problem_id!r}")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not self.seeds:
            raise ValueError("seed list must be non-empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seed list must be duplicate-free")
        for s in self.statistics:
            if s not in STATISTIC_NAMES:
                raise ValueError(f"unknown statistic {s!r}")
        for b in self.bound_checks:
            if b not in BOUND_CHECK_NAMES:
                raise ValueError(f"unknown bound check {b!r}")
        if self.k_grid is not None:
            grid = [int(k) for k in self.k_grid]
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ValueError("k_grid must be strictly increasing")
            if grid[-1] > self.iterations or grid[0] < 1:
                raise ValueError("k_grid must lie within [1, iterations]")
            self.k_grid = grid
        if self.x1 is not None:
            arr = np.asarray(self.x1, dtype=float)
            if arr.shape != (self.dim,) or not np.all(np.isfinite(arr)):
                raise ValueError("x1 must be a finite vector of length dim")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        # constructing the noise model validates kind/sigma
        NoiseModel(self.noise_kind, self.sigma)

    # -- JSON round trip ----------------------------------------------------

    @staticmethod
    def from_dict(d: dict) -> "ExperimentConfig":
        problem = d.get("problem", {})
        noise = d.get("noise", {"kind": "none", "sigma": 0.0})
        return ExperimentConfig(
            problem_id=problem.get("id"),
            dim=int(problem.get("dim", 1)),
            box_radius=problem.get("box_radius", 10.0),
            noise_kind=noise.get("kind", "none"),
            sigma=float(noise.get("sigma", 0.0)),
            hyperparams_raw=d["hyperparams"],
            iterations=int(d["iterations"]),
            seeds=[int(s) for s in d["seeds"]],
            statistics=list(d.get("statistics", list(STATISTIC_NAMES))),
            bound_checks=list(d.get("bound_checks", [])),
            k_grid=d.get("k_grid"),
            x1=d.get("x1"),
            thinning=d.get("thinning"),
            allow_nonconvergent=bool(d.get("allow_nonconvergent", False)),
            audit=bool(d.get("audit", False)),
            workers=int(d.get("workers", 1)),
            output_dir=d.get("output_dir", "runs/experiment"),
            confidence_z=float(d.get("confidence_z", ONE_SIDED_95_Z)),
        )

    @staticmethod
    def from_file(path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return ExperimentConfig.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {
            "problem": {"id": self.problem_id, "dim": self.dim,
                        "box_radius": self.box_radius},
            "noise": {"kind": self.noise_kind, "sigma": self.sigma},
            "hyperparams": self.hyperparams_raw,
            "iterations": self.iterations,
            "seeds": list(self.seeds),
            "statistics": list(self.statistics),
            "bound_checks": list(self.bound_checks),
            "k_grid": self.k_grid,
            "x1": self.x1,
            "thinning": self.thinning,
            "allow_nonconvergent": self.allow_nonconvergent,
            "audit": self.audit,
            "workers": self.workers,
            "output_dir": self.output_dir,
            "confidence_z": self.confidence_z,
        }

    def config_hash(self) -> str:
        # the hash identifies the experiment, not where it is written or
        # how many workers computed it
        payload = self.to_dict()
        payload.pop("output_dir")
        payload.pop("workers")
        return canonical_hash(payload)

    # -- resolution against a constructed problem ---------------------------

    def resolve_hyperparams(self, problem) -> HyperParams:
        """Build HyperParams, wiring certified constants into pl_step_certified."""
        raw = dict(self.hyperparams_raw)
        eta_raw = dict(raw["eta"])
        if eta_raw.get("kind") == "pl_step_certified":
            if problem.pl_v_hat is None:
                raise ValueError(
                    f"problem {problem.id!r} has no certified PL modulus"
                )
            eta_raw = {
                "kind": "pl_step",
                "grad_bound": problem.m_bound,
                "epsilon": eta_raw.get("epsilon", raw.get("epsilon", 1e-8)),
                "beta": eta_raw.get("beta", 0.0),
                "pl_constant": problem.pl_v_hat,
            }
        return HyperParams(
            eta=spec_from_dict(eta_raw),
            theta=spec_from_dict(raw["theta"]),
            beta=spec_from_dict(raw["beta"]),
            epsilon=float(raw.get("epsilon", 1e-8)),
            beta_cap=float(raw.get("beta_cap", 0.9)),
        )

    def schedule_family(self):
        """(eta, theta) specs for family-level decisions only.

        A pl_step_certified eta is represented by a unit-constant PLStep,
        which has the same decay family as the resolved schedule.
        """
        eta_raw = dict(self.hyperparams_raw["eta"])
        if eta_raw.get("kind") == "pl_step_certified":
            eta = PLStep(grad_bound=1.0, epsilon=float(eta_raw.get("epsilon", 1.0)),
                         beta=float(eta_raw.get("beta", 0.0)), pl_constant=1.0)
        else:
            eta = spec_from_dict(eta_raw)
        return eta, spec_from_dict(self.hyperparams_raw["theta"])

    def grid(self) -> list:
        return self.k_grid if self.k_grid is not None else default_k_grid(self.iterations)
