"""Hyperparameter schedules and sufficient-condition checkers.

A schedule assigns a value to every iteration index k >= 1: the step size
eta_k, the second-order momentum theta_k, or the first-order momentum
beta_k.  Parametric families are evaluated in closed form; tabulated
schedules are backed by a finite value table.

Two sufficient conditions for the convergence of Adam are decided here:

* ``SC-Adam`` -- the relaxed condition: bounded beta, theta in (0, 1),
  eta within constant factors of a non-increasing sequence, and the two
  ratio sequences ``sum eta_k (1-theta_k) / (K eta_K)`` and
  ``sum eta_k^2 / (K eta_K)`` vanishing.
* ``SC-Zou`` -- the stricter classical condition of Zou et al. (2019):
  non-decreasing theta, ``eta_k / sqrt(1-theta_k)`` sandwiched by a
  non-increasing sequence, and ``sum eta_k sqrt(1-theta_k) / (K eta_K)``
  vanishing.

For the power families the verdicts are exact case analyses on the
exponents ("analytic" mode); for tabulated schedules a finite-horizon
trend test is used ("numeric" mode) and reported as such.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Optional, Union

import numpy as np

__all__ = [
    "PowerEta",
    "PowerTheta",
    "ConstantTheta",
    "ConstantBeta",
    "PLStep",
    "Tabulated",
    "ScheduleSpec",
    "HyperParams",
    "ScheduleVerdict",
    "eval_schedule",
    "schedule_values",
    "check_sc_adam",
    "check_sc_zou",
    "implication_property",
    "ImplicationReport",
]

SC_ADAM_IDS = ("1", "2", "3", "4", "5")
SC_ZOU_IDS = ("z1", "z2", "z3", "z4")


# ---------------------------------------------------------------------------
# schedule families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PowerEta:
    """Step size eta_k = scale * k**(-exponent), scale > 0, exponent >= 0."""

    scale: float = 1.0
    exponent: float = 0.5

    def __post_init__(self):
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError(f"PowerEta scale must be positive, got {self.scale}")
        if not (self.exponent >= 0 and math.isfinite(self.exponent)):
            raise ValueError(f"PowerEta exponent must be >= 0, got {self.exponent}")

    def _eval(self, k: np.ndarray) -> np.ndarray:
        return self.scale * k ** (-self.exponent)

    def value(self, k: int) -> float:
        # route through the vectorised path so scalar and vector
        # evaluation agree bit for bit
        return float(self._eval(np.array([float(k)]))[0])

    def values(self, upto: int) -> np.ndarray:
        return self._eval(np.arange(1, upto + 1, dtype=float))


@dataclass(frozen=True)
class PowerTheta:
    """Second-order momentum theta_k = 1 - k**(-exponent), exponent > 0.

    The raw formula gives theta_1 = 0, outside the admissible open
    interval (0, 1); the index is shifted by one at k = 1 only, i.e.
    theta_1 = 1 - 2**(-exponent) = theta_2, which keeps the sequence
    non-decreasing and leaves every tail property untouched.
    """

    exponent: float = 1.0

    def __post_init__(self):
        if not (self.exponent > 0 and math.isfinite(self.exponent)):
            raise ValueError(f"PowerTheta exponent must be > 0, got {self.exponent}")

    def _eval(self, k: np.ndarray) -> np.ndarray:
        return 1.0 - k ** (-self.exponent)

    def value(self, k: int) -> float:
        return float(self._eval(np.array([2.0 if k == 1 else float(k)]))[0])

    def values(self, upto: int) -> np.ndarray:
        k = np.arange(1, upto + 1, dtype=float)
        if upto >= 1:
            k[0] = 2.0
        return self._eval(k)


@dataclass(frozen=True)
class ConstantTheta:
    """Constant second-order momentum theta in (0, 1)."""

    value_: float

    def __post_init__(self):
        if not (0.0 < self.value_ < 1.0):
            raise ValueError(f"ConstantTheta must lie in (0, 1), got {self.value_}")

    def value(self, k: int) -> float:
        return self.value_

    def values(self, upto: int) -> np.ndarray:
        return np.full(upto, self.value_)


@dataclass(frozen=True)
class ConstantBeta:
    """Constant first-order momentum beta in [0, 1)."""

    value_: float

    def __post_init__(self):
        if not (0.0 <= self.value_ < 1.0):
            raise ValueError(f"ConstantBeta must lie in [0, 1), got {self.value_}")

    def value(self, k: int) -> float:
        return self.value_

    def values(self, upto: int) -> np.ndarray:
        return np.full(upto, self.value_)


@dataclass(frozen=True)
class PLStep:
    """Step size sqrt(M^2 + eps) / ((1 - beta) * v) * 1 / (k + 1).

    The prescription used for the O(1/K) function-value rate on
    PL objectives; ``grad_bound`` is the almost-sure bound M on the
    stochastic gradients and ``pl_constant`` the PL modulus v.
    """

    grad_bound: float
    epsilon: float
    beta: float
    pl_constant: float

    def __post_init__(self):
        if not (self.grad_bound > 0):
            raise ValueError("PLStep grad_bound must be positive")
        if not (self.epsilon >= 0):
            raise ValueError("PLStep epsilon must be non-negative")
        if not (0.0 <= self.beta < 1.0):
            raise ValueError("PLStep beta must lie in [0, 1)")
        if not (self.pl_constant > 0):
            raise ValueError("PLStep pl_constant must be positive")

    @property
    def scale(self) -> float:
        return math.sqrt(self.grad_bound**2 + self.epsilon) / (
            (1.0 - self.beta) * self.pl_constant
        )

    def _eval(self, k: np.ndarray) -> np.ndarray:
        return self.scale / (k + 1.0)

    def value(self, k: int) -> float:
        return float(self._eval(np.array([float(k)]))[0])

    def values(self, upto: int) -> np.ndarray:
        return self._eval(np.arange(1, upto + 1, dtype=float))


@dataclass(frozen=True)
class Tabulated:
    """Finite table of per-iteration values, 1-indexed."""

    values_: tuple

    def __init__(self, values):
        arr = tuple(float(v) for v in np.asarray(values, dtype=float))
        if len(arr) == 0:
            raise ValueError("Tabulated schedule needs at least one value")
        if not all(math.isfinite(v) for v in arr):
            raise ValueError("Tabulated values must be finite")
        object.__setattr__(self, "values_", arr)

    def value(self, k: int) -> float:
        if k > len(self.values_):
            raise IndexError(
                f"Tabulated schedule has {len(self.values_)} entries, asked for k={k}"
            )
        return self.values_[k - 1]

    def values(self, upto: int) -> np.ndarray:
        if upto > len(self.values_):
            raise IndexError(
                f"Tabulated schedule has {len(self.values_)} entries, asked for {upto}"
            )
        return np.asarray(self.values_[:upto], dtype=float)


ScheduleSpec = Union[PowerEta, PowerTheta, ConstantTheta, ConstantBeta, PLStep, Tabulated]

_KIND_NAMES = {
    PowerEta: "power_eta",
    PowerTheta: "power_theta",
    ConstantTheta: "constant_theta",
    ConstantBeta: "constant_beta",
    PLStep: "pl_step",
    Tabulated: "tabulated",
}


def eval_schedule(spec: ScheduleSpec, k: int) -> float:
    """Evaluate a schedule at iteration k >= 1.  Pure and deterministic."""
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool):
        raise ValueError(f"iteration index must be an integer, got {k!r}")
    if k < 1:
        raise ValueError(f"iteration index must be >= 1, got {k}")
    return spec.value(int(k))


def schedule_values(spec, upto: int) -> np.ndarray:
    """Vector of schedule values for k = 1..upto; arrays pass through."""
    if isinstance(spec, np.ndarray):
        if len(spec) < upto:
            raise IndexError(f"value array has {len(spec)} entries, asked for {upto}")
        return np.asarray(spec[:upto], dtype=float)
    if upto < 1:
        raise ValueError(f"horizon must be >= 1, got {upto}")
    return spec.values(upto)


def spec_to_dict(spec: ScheduleSpec) -> dict:
    """JSON-friendly form, e.g. {"kind": "power_eta", "scale": 1.0, "exponent": 0.5}."""
    kind = _KIND_NAMES[type(spec)]
    if isinstance(spec, PowerEta):
        return {"kind": kind, "scale": spec.scale, "exponent": spec.exponent}
    if isinstance(spec, PowerTheta):
        return {"kind": kind, "exponent": spec.exponent}
    if isinstance(spec, (ConstantTheta, ConstantBeta)):
        return {"kind": kind, "value": spec.value_}
    if isinstance(spec, PLStep):
        return {
            "kind": kind,
            "grad_bound": spec.grad_bound,
            "epsilon": spec.epsilon,
            "beta": spec.beta,
            "pl_constant": spec.pl_constant,
        }
    return {"kind": kind, "values": list(spec.values_)}


def spec_from_dict(d: dict) -> ScheduleSpec:
    kind = d.get("kind")
    if kind == "power_eta":
        return PowerEta(scale=d.get("scale", 1.0), exponent=d["exponent"])
    if kind == "power_theta":
        return PowerTheta(exponent=d["exponent"])
    if kind == "constant_theta":
        return ConstantTheta(d["value"])
    if kind == "constant_beta":
        return ConstantBeta(d["value"])
    if kind == "pl_step":
        return PLStep(
            grad_bound=d["grad_bound"],
            epsilon=d["epsilon"],
            beta=d["beta"],
            pl_constant=d["pl_constant"],
        )
    if kind == "tabulated":
        return Tabulated(d["values"])
    raise KeyError(f"unknown schedule kind {kind!r}")


# ---------------------------------------------------------------------------
# hyperparameter bundle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HyperParams:
    """The full (eta_k, theta_k, beta_k, epsilon) input of the optimizer.

    ``beta_cap`` is the uniform upper bound beta with 0 <= beta_k <= beta < 1
    that every convergence constant depends on.
    """

    eta: ScheduleSpec
    theta: ScheduleSpec
    beta: ScheduleSpec
    epsilon: float = 1e-8
    beta_cap: float = 0.9

    def __post_init__(self):
        if not (self.epsilon >= 0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if not (0.0 <= self.beta_cap < 1.0):
            raise ValueError(f"beta_cap must lie in [0, 1), got {self.beta_cap}")
        if isinstance(self.beta, ConstantBeta) and self.beta.value_ > self.beta_cap:
            raise ValueError("constant beta exceeds beta_cap")
        if isinstance(self.beta, Tabulated):
            vals = np.asarray(self.beta.values_)
            if vals.min() < 0 or vals.max() > self.beta_cap:
                raise ValueError("tabulated beta values must lie in [0, beta_cap]")
        if isinstance(self.theta, Tabulated):
            vals = np.asarray(self.theta.values_)
            if vals.min() <= 0 or vals.max() >= 1:
                raise ValueError("tabulated theta values must lie in (0, 1)")
        if isinstance(self.eta, Tabulated):
            if min(self.eta.values_) < 0:
                raise ValueError("tabulated eta values must be non-negative")

    def eta_at(self, k: int) -> float:
        return eval_schedule(self.eta, k)

    def theta_at(self, k: int) -> float:
        return eval_schedule(self.theta, k)

    def beta_at(self, k: int) -> float:
        return eval_schedule(self.beta, k)

    def to_dict(self) -> dict:
        return {
            "eta": spec_to_dict(self.eta),
            "theta": spec_to_dict(self.theta),
            "beta": spec_to_dict(self.beta),
            "epsilon": self.epsilon,
            "beta_cap": self.beta_cap,
        }

    @staticmethod
    def from_dict(d: dict) -> "HyperParams":
        return HyperParams(
            eta=spec_from_dict(d["eta"]),
            theta=spec_from_dict(d["theta"]),
            beta=spec_from_dict(d["beta"]),
            epsilon=d.get("epsilon", 1e-8),
            beta_cap=d.get("beta_cap", 0.9),
        )


# ---------------------------------------------------------------------------
# verdicts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScheduleVerdict:
    """Outcome of one numbered condition, with how it was decided."""

    condition_id: str
    passed: bool
    mode: str  # "analytic" | "numeric"
    witness: Optional[dict] = None

    def to_dict(self) -> dict:
        return asdict(self)


def _is_power_eta(spec) -> bool:
    return isinstance(spec, (PowerEta, PLStep))


def _eta_exponent(spec) -> float:
    # PLStep behaves like exponent 1 up to the (k+1) shift, which no limit
    # statement can see.
    return 1.0 if isinstance(spec, PLStep) else spec.exponent


def _grid(horizon: int) -> np.ndarray:
    """Geometric integer grid ending at the horizon, decade point included."""
    lo = min(100, horizon)
    ks = np.unique(np.round(np.geomspace(lo, horizon, 25)).astype(int))
    must = {horizon, max(1, horizon // 10)}
    return np.unique(np.concatenate([ks, np.array(sorted(must), dtype=int)]))


def _trend_vanishes(ks, ratios, horizon, slope_threshold, abs_floor):
    """Finite proxy for ratio -> 0: negative log-log slope over the last
    decade (or the value already below an absolute floor).

    A plain decay-factor test cannot separate slow power decay from
    convergence to a positive constant at a fixed horizon; the fitted
    slope can, down to decay exponents of about -0.05.
    """
    ks = np.asarray(ks, dtype=float)
    ratios = np.asarray(ratios, dtype=float)
    at = {int(k): r for k, r in zip(ks, ratios)}
    hi = at[horizon]
    lo = at[max(1, horizon // 10)]
    decade = ks >= horizon / 10.0
    if np.sum(decade) >= 2 and np.all(ratios[decade] > 0):
        slope = float(np.polyfit(np.log(ks[decade]), np.log(ratios[decade]), 1)[0])
    else:
        slope = 0.0 if hi > 0 else -math.inf
    passed = bool(hi < abs_floor or slope <= slope_threshold)
    witness = {
        "ratio_at_horizon": float(hi),
        "decade_factor": float(hi / lo) if lo > 0 else math.inf,
        "decade_slope": slope,
    }
    return passed, witness


def _ratio_series(eta_vals, weight_vals, ks):
    """(sum_{k<=K} eta_k * w_k) / (K * eta_K) on the grid of Ks."""
    csum = np.cumsum(eta_vals * weight_vals)
    out = np.empty(len(ks))
    for i, K in enumerate(ks):
        denom = K * eta_vals[K - 1]
        if denom <= 0:
            raise ValueError("ratio test needs positive eta at the grid points")
        out[i] = csum[K - 1] / denom
    return out


class _Checker:
    """Shared machinery for the two condition checkers."""

    def __init__(self, hp, horizon, mode, trend_slope, abs_floor, envelope_c):
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        if mode not in ("auto", "analytic", "numeric"):
            raise ValueError(f"unknown mode {mode!r}")
        if mode == "numeric" and horizon < 100:
            raise ValueError("numeric mode needs horizon >= 100")
        self.hp = hp
        self.horizon = int(horizon)
        self.mode = mode
        self.trend_slope = trend_slope
        self.abs_floor = abs_floor
        self.envelope_c = envelope_c
        self._eta_vals = None
        self._theta_vals = None

    # value tables, materialised lazily only when a numeric test needs them
    def eta_vals(self):
        if self._eta_vals is None:
            self._eta_vals = schedule_values(self.hp.eta, self.horizon)
            if np.any(self._eta_vals <= 0):
                raise ValueError("condition checks require strictly positive eta")
        return self._eta_vals

    def theta_vals(self):
        if self._theta_vals is None:
            self._theta_vals = schedule_values(self.hp.theta, self.horizon)
        return self._theta_vals

    def analytic_ok(self, *specs) -> bool:
        if self.mode == "numeric":
            return False
        ok = all(
            isinstance(s, (PowerEta, PowerTheta, ConstantTheta, ConstantBeta, PLStep))
            for s in specs
        )
        if not ok and self.mode == "analytic":
            raise ValueError("analytic mode unsupported for tabulated schedules")
        return ok

    # -- condition bodies ---------------------------------------------------

    def beta_range(self, cid) -> ScheduleVerdict:
        beta, cap = self.hp.beta, self.hp.beta_cap
        if self.analytic_ok(beta):
            passed = 0.0 <= beta.value_ <= cap < 1.0
            return ScheduleVerdict(cid, passed, "analytic", {"beta": beta.value_, "beta_cap": cap})
        vals = schedule_values(beta, self.horizon)
        bad = np.nonzero((vals < 0) | (vals > cap))[0]
        witness = {"max_beta": float(vals.max()), "beta_cap": cap}
        if bad.size:
            witness["first_violation_k"] = int(bad[0] + 1)
        return ScheduleVerdict(cid, bad.size == 0 and cap < 1.0, "numeric", witness)

    def theta_range(self, cid) -> ScheduleVerdict:
        theta = self.hp.theta
        if self.analytic_ok(theta):
            # both parametric theta families live in (0, 1) by construction
            return ScheduleVerdict(cid, isinstance(theta, (PowerTheta, ConstantTheta)),
                                   "analytic", None)
        vals = self.theta_vals()
        bad = np.nonzero((vals <= 0) | (vals >= 1))[0]
        witness = {"min_theta": float(vals.min()), "max_theta": float(vals.max())}
        if bad.size:
            witness["first_violation_k"] = int(bad[0] + 1)
        return ScheduleVerdict(cid, bad.size == 0, "numeric", witness)

    def eta_sandwich(self, cid) -> ScheduleVerdict:
        """eta_k = Theta(alpha_k) for some non-increasing alpha."""
        eta = self.hp.eta
        if self.analytic_ok(eta):
            # a power decay is itself non-increasing, so alpha = eta works
            q = _eta_exponent(eta)
            return ScheduleVerdict(cid, q >= 0, "analytic",
                                   {"alpha": "eta itself", "c0": 1.0, "c0_tilde": 1.0})
        return self._envelope(cid, self.eta_vals())

    def _envelope(self, cid, series) -> ScheduleVerdict:
        # suffix maximum is the tightest non-increasing majorant; the series
        # is Theta(non-increasing) on the prefix iff it stays within a
        # constant factor of that majorant
        suffix_max = np.maximum.accumulate(series[::-1])[::-1]
        with np.errstate(divide="ignore"):
            ratio = suffix_max / series
        worst = float(np.max(ratio))
        passed = bool(worst <= self.envelope_c)
        return ScheduleVerdict(cid, passed, "numeric",
                               {"c0": 1.0 / worst if worst > 0 else 0.0,
                                "c0_tilde": 1.0, "allowed_spread": self.envelope_c})

    def vanishing_ratio(self, cid, weight_pow: float) -> ScheduleVerdict:
        """(sum eta_k (1-theta_k)^w) / (K eta_K) -> 0, w in {1, 1/2}."""
        eta, theta = self.hp.eta, self.hp.theta
        if self.analytic_ok(eta, theta):
            return self._vanishing_ratio_analytic(cid, weight_pow)
        ks = _grid(self.horizon)
        weights = (1.0 - self.theta_vals()) ** weight_pow
        ratios = _ratio_series(self.eta_vals(), weights, ks)
        passed, witness = _trend_vanishes(ks, ratios, self.horizon,
                                          self.trend_slope, self.abs_floor)
        return ScheduleVerdict(cid, passed, "numeric", witness)

    def _vanishing_ratio_analytic(self, cid, w) -> ScheduleVerdict:
        eta, theta = self.hp.eta, self.hp.theta
        q = _eta_exponent(eta)
        if isinstance(theta, PowerTheta):
            # numerator ~ sum k^-(q + w p): converges, log-diverges, or grows
            # like K^(1-q-wp); denominator K eta_K ~ K^(1-q).  The ratio
            # vanishes iff q < 1.
            if q < 1.0:
                return ScheduleVerdict(cid, True, "analytic", {"limit": 0.0})
            lim = "positive constant" if q == 1.0 else "infinity"
            return ScheduleVerdict(cid, False, "analytic", {"limit": lim})
        # constant theta: the numerator is (1-theta)^w * sum eta, which is of
        # the same order as K eta_K (q < 1), or beats it (q >= 1)
        one_minus = (1.0 - theta.value_) ** w
        if q < 1.0:
            return ScheduleVerdict(cid, False, "analytic",
                                   {"limit": one_minus / (1.0 - q)})
        return ScheduleVerdict(cid, False, "analytic", {"limit": "infinity"})

    def vanishing_sq_ratio(self, cid) -> ScheduleVerdict:
        """(sum eta_k^2) / (K eta_K) -> 0."""
        eta = self.hp.eta
        if self.analytic_ok(eta):
            q = _eta_exponent(eta)
            scale = eta.scale
            if 0.0 < q < 1.0:
                return ScheduleVerdict(cid, True, "analytic", {"limit": 0.0})
            if q == 0.0:
                return ScheduleVerdict(cid, False, "analytic", {"limit": scale})
            if q == 1.0:
                return ScheduleVerdict(cid, False, "analytic",
                                       {"limit": "positive constant"})
            return ScheduleVerdict(cid, False, "analytic", {"limit": "infinity"})
        ks = _grid(self.horizon)
        ratios = _ratio_series(self.eta_vals(), self.eta_vals(), ks)
        passed, witness = _trend_vanishes(ks, ratios, self.horizon,
                                          self.trend_slope, self.abs_floor)
        return ScheduleVerdict(cid, passed, "numeric", witness)

    def theta_monotone(self, cid) -> ScheduleVerdict:
        theta = self.hp.theta
        if self.analytic_ok(theta):
            in_range = isinstance(theta, (PowerTheta, ConstantTheta))
            # 1 - k^-p is non-decreasing (the shifted theta_1 equals theta_2);
            # a constant is trivially non-decreasing
            return ScheduleVerdict(cid, in_range, "analytic", None)
        vals = self.theta_vals()
        in_range = bool(np.all((vals > 0) & (vals < 1)))
        drops = np.nonzero(np.diff(vals) < 0)[0]
        witness = {}
        if drops.size:
            witness["first_decrease_k"] = int(drops[0] + 1)
        return ScheduleVerdict(cid, in_range and drops.size == 0, "numeric",
                               witness or None)

    def normalized_eta_sandwich(self, cid) -> ScheduleVerdict:
        """eta_k / sqrt(1-theta_k) sandwiched by a non-increasing sequence."""
        eta, theta = self.hp.eta, self.hp.theta
        if self.analytic_ok(eta, theta):
            q = _eta_exponent(eta)
            growth = (theta.exponent / 2.0 - q if isinstance(theta, PowerTheta)
                      else -q)
            passed = growth <= 0
            return ScheduleVerdict(cid, passed, "analytic",
                                   {"normalized_eta_exponent": -growth if passed else growth,
                                    "monotone": "non-increasing" if passed else "increasing"})
        series = self.eta_vals() / np.sqrt(1.0 - self.theta_vals())
        return self._envelope(cid, series)


def check_sc_adam(hp: HyperParams, horizon: int = 100_000, mode: str = "auto",
                  trend_slope: float = -0.05, abs_floor: float = 1e-9,
                  envelope_c: float = 10.0) -> list:
    """Decide the five SC-Adam conditions; one verdict per condition.

    Parametric families are decided analytically; tabulated ones by the
    finite-horizon trend/envelope proxies (and labelled "numeric").
    """
    c = _Checker(hp, horizon, mode, trend_slope, abs_floor, envelope_c)
    return [
        c.beta_range("1"),
        c.theta_range("2"),
        c.eta_sandwich("3"),
        c.vanishing_ratio("4", 1.0),
        c.vanishing_sq_ratio("5"),
    ]


def check_sc_zou(hp: HyperParams, horizon: int = 100_000, mode: str = "auto",
                 trend_slope: float = -0.05, abs_floor: float = 1e-9,
                 envelope_c: float = 10.0) -> list:
    """Decide the four SC-Zou conditions; one verdict per condition."""
    c = _Checker(hp, horizon, mode, trend_slope, abs_floor, envelope_c)
    return [
        c.beta_range("z1"),
        c.theta_monotone("z2"),
        c.normalized_eta_sandwich("z3"),
        c.vanishing_ratio("z4", 0.5),
    ]


def all_pass(verdicts) -> bool:
    return all(v.passed for v in verdicts)


# ---------------------------------------------------------------------------
# implication property: SC-Zou pass  =>  SC-Adam pass
# ---------------------------------------------------------------------------

@dataclass
class ImplicationReport:
    samples: int
    zou_pass_count: int
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "zou_pass_count": self.zou_pass_count,
            "violations": self.violations,
            "passed": self.passed,
        }


def implication_property(sample_count: int, rng_seed: int,
                         q_range=(0.05, 1.3), p_range=(0.1, 3.0),
                         scale_range=(0.2, 5.0)) -> ImplicationReport:
    """Draw random power-family schedules and check SC-Zou => SC-Adam.

    Any counterexample is recorded (and constitutes a failure of the
    property).  Both checkers run in analytic mode, so the verdicts are
    exact for these families.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    rng = np.random.default_rng(rng_seed)
    report = ImplicationReport(samples=sample_count, zou_pass_count=0)
    for _ in range(sample_count):
        q = float(rng.uniform(*q_range))
        scale = float(rng.uniform(*scale_range))
        if rng.random() < 0.2:
            theta: ScheduleSpec = ConstantTheta(float(rng.uniform(0.05, 0.95)))
        else:
            theta = PowerTheta(exponent=float(rng.uniform(*p_range)))
        beta = float(rng.uniform(0.0, 0.99))
        hp = HyperParams(
            eta=PowerEta(scale=scale, exponent=q),
            theta=theta,
            beta=ConstantBeta(beta),
            epsilon=1e-8,
            beta_cap=max(beta, 0.99),
        )
        zou = check_sc_zou(hp, mode="analytic")
        if not all_pass(zou):
            continue
        report.zou_pass_count += 1
        adam = check_sc_adam(hp, mode="analytic")
        if not all_pass(adam):
            report.violations.append({
                "hyperparams": hp.to_dict(),
                "sc_adam": [v.to_dict() for v in adam],
            })
    return report
