"""The Adam update, exactly as analysed: element-wise EMAs, no bias
correction, epsilon inside the square root.

    m^k = beta_k m^{k-1} + (1 - beta_k) g^k
    v^k = theta_k v^{k-1} + (1 - theta_k) (g^k)^2
    x^{k+1} = x^k - eta_k m^k / sqrt(v^k + eps)

With beta_k = 0 this is RMSProp; with theta_k = 1 - 1/k the second-order
term is the running average of squared gradients.  Library Adam variants
divide by sqrt(v) + eps and rescale by the bias corrections 1 - beta^k;
neither is done here, since every bound audited downstream depends on
the uncorrected form with eps under the root.

``run`` executes K seeded steps against a problem's stochastic oracle
and records a thinned trajectory; identical inputs (including the seed)
reproduce the trajectory bit for bit.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .problems import NoiseModel, Problem
from .schedules import HyperParams, schedule_values

__all__ = [
    "AdamState",
    "StepRecord",
    "Trajectory",
    "DivisionHazardError",
    "init_state",
    "adam_step",
    "run",
    "default_thinning",
]

TRAJECTORY_CSV_HEADER = (
    "k,grad_norm,stoch_grad_norm,f_gap,m_norm,v_norm,update_norm,eta,theta,beta"
)


class DivisionHazardError(ArithmeticError):
    """A step would divide a non-zero momentum by an exactly-zero root."""


@dataclass(frozen=True)
class AdamState:
    """Iterate, first/second-order momenta and the iteration counter."""

    x: np.ndarray
    m: np.ndarray
    v: np.ndarray
    k: int = 0


class StepRecord(NamedTuple):
    k: int
    grad_norm: float          # ||grad f(x^k)||, noiseless
    stoch_grad_norm: float    # ||g^k||
    f_gap: float              # f(x^k) - f_star
    m_norm: float
    v_norm: float
    update_norm: float        # ||x^{k+1} - x^k||
    eta: float
    theta: float
    beta: float


class ProbeSnapshot(NamedTuple):
    """Exact prefix statistics captured at a probe iteration."""

    k: int
    min_gradsq: float         # min_{j<=k} ||grad f(x^j)||^2
    sum_gradsq: float         # sum_{j<=k} ||grad f(x^j)||^2
    grad_norm: float          # ||grad f(x^k)||
    f_gap: float              # f(x^k) - f_star
    f_gap_next: float         # f(x^{k+1}) - f_star, the gap after k updates


@dataclass
class AuditTrace:
    """Full per-step state kept only in audit mode (at recorded steps)."""

    ks: np.ndarray
    x: np.ndarray
    m: np.ndarray
    v_prev: np.ndarray
    v: np.ndarray


@dataclass
class Trajectory:
    problem_id: str
    dim: int
    hyperparams: dict
    seed: int
    iterations: int
    thinning: int
    columns: dict                      # name -> np.ndarray over recorded steps
    probes: list = field(default_factory=list)
    first_box_exit: Optional[int] = None
    aborted_at: Optional[int] = None
    audit: Optional[AuditTrace] = None

    @property
    def recorded_ks(self) -> np.ndarray:
        return self.columns["k"]

    def records(self) -> list:
        cols = self.columns
        return [
            StepRecord(
                int(cols["k"][i]), *(float(cols[name][i]) for name in
                                     ("grad_norm", "stoch_grad_norm", "f_gap",
                                      "m_norm", "v_norm", "update_norm",
                                      "eta", "theta", "beta"))
            )
            for i in range(len(cols["k"]))
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(TRAJECTORY_CSV_HEADER + "\n")
        cols = self.columns
        names = TRAJECTORY_CSV_HEADER.split(",")[1:]
        for i in range(len(cols["k"])):
            row = [str(int(cols["k"][i]))]
            row.extend(repr(float(cols[name][i])) for name in names)
            buf.write(",".join(row) + "\n")
        return buf.getvalue()

    def to_json(self) -> str:
        payload = {
            "problem_id": self.problem_id,
            "dim": self.dim,
            "hyperparams": self.hyperparams,
            "seed": self.seed,
            "iterations": self.iterations,
            "thinning": self.thinning,
            "first_box_exit": self.first_box_exit,
            "aborted_at": self.aborted_at,
            "records": {
                name: [repr(float(v)) for v in col] if name != "k"
                else [int(v) for v in col]
                for name, col in self.columns.items()
            },
            "probes": [p._asdict() for p in self.probes],
        }
        return json.dumps(payload, sort_keys=True, indent=1)


def init_state(x1) -> AdamState:
    """Fresh state: k = 0, zero momenta, iterate at x1."""
    x = np.asarray(x1, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("x1 must be a non-empty 1-D vector")
    if not np.all(np.isfinite(x)):
        raise ValueError("x1 must be finite")
    return AdamState(x=x.copy(), m=np.zeros_like(x), v=np.zeros_like(x), k=0)


def adam_step(state: AdamState, g, eta_k: float, beta_k: float,
              theta_k: float, epsilon: float) -> AdamState:
    """One update of Algorithm state; pure, returns the successor state."""
    g = np.asarray(g, dtype=float)
    if g.shape != state.x.shape:
        raise ValueError(f"gradient shape {g.shape} != state shape {state.x.shape}")
    if eta_k < 0:
        raise ValueError("eta_k must be non-negative")
    if not (0.0 <= beta_k < 1.0):
        raise ValueError("beta_k must lie in [0, 1)")
    if not (0.0 < theta_k < 1.0):
        raise ValueError("theta_k must lie in (0, 1)")
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")

    m = beta_k * state.m + (1.0 - beta_k) * g
    v = theta_k * state.v + (1.0 - theta_k) * g * g
    denom = np.sqrt(v + epsilon)
    zero = denom == 0.0
    if np.any(zero & (m != 0.0)):
        raise DivisionHazardError(
            f"zero sqrt(v + eps) against non-zero momentum at k={state.k + 1}"
        )
    if np.any(zero):
        # 0/0 components contribute no movement
        ratio = np.where(zero, 0.0, m / np.where(zero, 1.0, denom))
    else:
        ratio = m / denom
    return AdamState(x=state.x - eta_k * ratio, m=m, v=v, k=state.k + 1)


def default_thinning(iterations: int, cap: int = 10_000) -> int:
    """Record every step up to the cap, then stride to stay within it."""
    return 1 if iterations <= cap else math.ceil(iterations / cap)


def _recorded_ks(iterations: int, thinning: int) -> np.ndarray:
    ks = np.arange(1, iterations + 1, thinning)
    if ks[-1] != iterations:
        ks = np.append(ks, iterations)
    return ks


def run(problem: Problem, hp: HyperParams, seed: int, iterations: int,
        thinning: Optional[int] = None, noise: Optional[NoiseModel] = None,
        x1=None, probe_ks=None, audit: bool = False) -> Trajectory:
    """Execute `iterations` seeded Adam steps on the problem's oracle.

    Records every `thinning`-th step (k = 1 and k = K always included).
    `probe_ks` asks for exact prefix statistics at those iterations; audit
    mode additionally stores the full (x, m, v) state at recorded steps.
    Aborts with a diagnostic marker if the iterate leaves the finite
    floating-point range.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    K = int(iterations)
    thinning = default_thinning(K) if thinning is None else int(thinning)
    if thinning < 1:
        raise ValueError("thinning must be >= 1")
    noise = noise if noise is not None else NoiseModel("none", problem.sigma)
    if x1 is None:
        x1 = default_start(problem)
    state = init_state(x1)
    if state.x.size != problem.dim:
        raise ValueError(f"x1 has dimension {state.x.size}, problem has {problem.dim}")

    rng = np.random.default_rng(seed)
    etas = schedule_values(hp.eta, K)
    thetas = schedule_values(hp.theta, K)
    betas = schedule_values(hp.beta, K)

    rec_ks = _recorded_ks(K, thinning)
    n_rec = len(rec_ks)
    rec_index = {int(k): i for i, k in enumerate(rec_ks)}
    cols = {name: np.zeros(n_rec) for name in
            ("grad_norm", "stoch_grad_norm", "f_gap", "m_norm", "v_norm",
             "update_norm", "eta", "theta", "beta")}
    cols["k"] = rec_ks.astype(float)

    probe_set = set(int(k) for k in (probe_ks or []))
    if any(k < 1 or k > K for k in probe_set):
        raise ValueError("probe iterations must lie in [1, K]")
    probes = []

    audit_store = None
    if audit:
        d = problem.dim
        audit_store = AuditTrace(
            ks=rec_ks.copy(),
            x=np.zeros((n_rec, d)), m=np.zeros((n_rec, d)),
            v_prev=np.zeros((n_rec, d)), v=np.zeros((n_rec, d)),
        )

    f, grad = problem.f, problem.grad
    f_star = problem.f_star
    box_r = problem.box_radius
    eps = hp.epsilon

    x, m, v = state.x, state.m, state.v
    min_gradsq = math.inf
    sum_gradsq = 0.0
    comp = 0.0  # Kahan compensation for the prefix sum of ||grad||^2
    first_exit = None
    aborted_at = None

    for k in range(1, K + 1):
        true_grad = grad(x)
        g = true_grad if noise.sigma == 0.0 else true_grad + noise.sample(rng, len(x))
        gradsq = float(np.dot(true_grad, true_grad))
        if gradsq < min_gradsq:
            min_gradsq = gradsq
        y = gradsq - comp
        t = sum_gradsq + y
        comp = (t - sum_gradsq) - y
        sum_gradsq = t

        eta_k, theta_k, beta_k = etas[k - 1], thetas[k - 1], betas[k - 1]
        v_prev = v
        m = beta_k * m + (1.0 - beta_k) * g
        v = theta_k * v + (1.0 - theta_k) * g * g
        denom = np.sqrt(v + eps)
        zero = denom == 0.0
        if np.any(zero & (m != 0.0)):
            raise DivisionHazardError(
                f"zero sqrt(v + eps) against non-zero momentum at k={k}"
            )
        update = eta_k * np.where(zero, 0.0, m / np.where(zero, 1.0, denom))
        x_next = x - update

        i = rec_index.get(k)
        if i is not None:
            cols["grad_norm"][i] = math.sqrt(gradsq)
            cols["stoch_grad_norm"][i] = float(np.linalg.norm(g))
            cols["f_gap"][i] = float(f(x)) - f_star
            cols["m_norm"][i] = float(np.linalg.norm(m))
            cols["v_norm"][i] = float(np.linalg.norm(v))
            cols["update_norm"][i] = float(np.linalg.norm(update))
            cols["eta"][i] = eta_k
            cols["theta"][i] = theta_k
            cols["beta"][i] = beta_k
            if audit_store is not None:
                audit_store.x[i] = x
                audit_store.m[i] = m
                audit_store.v_prev[i] = v_prev
                audit_store.v[i] = v

        if k in probe_set:
            probes.append(ProbeSnapshot(
                k=k,
                min_gradsq=min_gradsq,
                sum_gradsq=sum_gradsq,
                grad_norm=math.sqrt(gradsq),
                f_gap=float(f(x)) - f_star,
                f_gap_next=float(f(x_next)) - f_star,
            ))

        if box_r is not None and first_exit is None:
            if np.any(np.abs(x_next) > box_r):
                first_exit = k

        if not np.all(np.isfinite(x_next)):
            aborted_at = k
            keep = rec_ks <= k
            for name in cols:
                cols[name] = cols[name][keep]
            if audit_store is not None:
                audit_store.ks = audit_store.ks[keep]
                for attr in ("x", "m", "v_prev", "v"):
                    setattr(audit_store, attr, getattr(audit_store, attr)[keep])
            break
        x = x_next

    return Trajectory(
        problem_id=problem.id,
        dim=problem.dim,
        hyperparams=hp.to_dict(),
        seed=int(seed),
        iterations=K,
        thinning=thinning,
        columns=cols,
        probes=probes,
        first_box_exit=first_exit,
        aborted_at=aborted_at,
        audit=audit_store,
    )


def default_start(problem: Problem, fill_fraction: float = 0.8) -> np.ndarray:
    """All-ones start scaled to the given fraction of the box radius."""
    radius = problem.box_radius if problem.box_radius is not None else 10.0
    return np.full(problem.dim, fill_fraction * radius)
