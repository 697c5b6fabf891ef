"""Closed-form convergence bounds and brute-force inequality checks.

Three bound families are evaluated with their explicit constants:

* minimum output:   min_{k<=K} E||grad f(x^k)||^2
                    <= (C1 + C2 S_drift(K) + C3 S_sq(K)) / S_eta(K)
* uniform output:   E||grad f(x^tau)||^2
                    <= (C1' + C2' S_drift(K) + C3' S_sq(K)) / (K eta_K)
* PL function gap:  E f(x^{K+1}) - f*
                    <= (C_mom/(1-b)^2 + C_curv) / (K+1)
                       + C_drift/(1-b)^2 * sum k (1-theta_k) / (K (K+1))

with S_eta = sum eta_k, S_drift = sum eta_k (1-theta_k), S_sq = sum
eta_k^2.  Partial sums use compensated accumulation so bound values stay
trustworthy out to K = 1e6.

The module also brute-forces the two summation inequalities and the
recursion unrolling that the bounds rest on, audits recorded
trajectories against the pointwise momentum/gradient inequalities, and
fits empirical decay exponents from (K, value) series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .schedules import schedule_values

__all__ = [
    "GradBoundConstants",
    "PLBoundConstants",
    "min_output_constants",
    "uniform_output_constants",
    "pl_constants",
    "min_output_bound",
    "uniform_output_bound",
    "pl_gap_bound",
    "partial_sums",
    "geom_double_sum_check",
    "recursion_unroll_check",
    "gamma_products",
    "audit_trajectory",
    "TrajectoryAuditReport",
    "fit_rate",
    "RateFit",
]


# ---------------------------------------------------------------------------
# compensated partial sums
# ---------------------------------------------------------------------------

def partial_sums(values: np.ndarray, ks) -> np.ndarray:
    """Compensated prefix sums of `values` at the (sorted) indices `ks`.

    Uses exact accumulation (math.fsum) per segment, so the relative error
    stays far below 1e-10 even at K = 1e6.
    """
    ks = [int(k) for k in ks]
    if any(b < a for a, b in zip(ks, ks[1:])):
        raise ValueError("indices must be non-decreasing")
    if ks and (ks[0] < 1 or ks[-1] > len(values)):
        raise ValueError("indices outside the value range")
    out = np.empty(len(ks))
    total = 0.0
    prev = 0
    for i, k in enumerate(ks):
        seg = values[prev:k].tolist()
        seg.append(total)
        total = math.fsum(seg)
        out[i] = total
        prev = k
    return out


def _sums_for(eta_spec, theta_spec, ks):
    ks = [int(k) for k in ks]
    if any(b < a for a, b in zip(ks, ks[1:])):
        raise ValueError("evaluation grid must be non-decreasing")
    if ks[0] < 1:
        raise ValueError("K must be >= 1")
    K = ks[-1]
    eta = schedule_values(eta_spec, K)
    theta = schedule_values(theta_spec, K)
    s_eta = partial_sums(eta, ks)
    s_drift = partial_sums(eta * (1.0 - theta), ks)
    s_sq = partial_sums(eta * eta, ks)
    eta_at = eta[np.array(ks) - 1]
    return ks, s_eta, s_drift, s_sq, eta_at


# ---------------------------------------------------------------------------
# bound constants
# ---------------------------------------------------------------------------

def _validate_common(m_bound, epsilon, beta, dim, smoothness):
    if not (m_bound > 0):
        raise ValueError("gradient bound M must be positive")
    if not (epsilon > 0):
        raise ValueError("the explicit constants need epsilon > 0")
    if not (0.0 <= beta < 1.0):
        raise ValueError("beta must lie in [0, 1)")
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if not (smoothness > 0):
        raise ValueError("smoothness constant L must be positive")


@dataclass(frozen=True)
class GradBoundConstants:
    """Numerator coefficients of the gradient-norm bounds.

    ``gap_term`` multiplies 1, ``drift_coef`` multiplies
    sum eta_k (1-theta_k), ``step_coef`` multiplies sum eta_k^2.
    """

    gap_term: float
    drift_coef: float
    step_coef: float

    def __post_init__(self):
        if self.gap_term < 0 or self.drift_coef <= 0 or self.step_coef <= 0:
            raise ValueError("bound constants must be positive (gap term >= 0)")

    def to_dict(self):
        return {"gap_term": self.gap_term, "drift_coef": self.drift_coef,
                "step_coef": self.step_coef}


def min_output_constants(m_bound, epsilon, beta, dim, smoothness,
                         c0=1.0, c0_tilde=1.0, f1_gap=0.0) -> GradBoundConstants:
    """Constants of the minimum-output bound.

    c0 and c0_tilde sandwich the step size around a non-increasing
    sequence: c0 * alpha_k <= eta_k <= c0_tilde * alpha_k.
    """
    _validate_common(m_bound, epsilon, beta, dim, smoothness)
    if not (0.0 < c0 <= c0_tilde):
        raise ValueError("need 0 < c0 <= c0_tilde")
    if f1_gap < 0:
        raise ValueError("initial function gap cannot be negative")
    root = math.sqrt(m_bound**2 + epsilon)
    one_minus = 1.0 - beta
    gap = root * f1_gap / one_minus
    drift = (c0_tilde * m_bound**4 * math.sqrt(dim * (m_bound**2 + epsilon))
             / (epsilon**1.5 * c0 * one_minus**2))
    step = (2.0 * c0_tilde**2 * m_bound**2 * smoothness * root
            / (epsilon * c0**2 * one_minus**2))
    return GradBoundConstants(gap, drift, step)


def uniform_output_constants(m_bound, epsilon, beta, dim, smoothness,
                             c0=1.0, c0_tilde=1.0, f1_gap=0.0) -> GradBoundConstants:
    """Constants of the uniform-output bound: the minimum-output ones
    scaled by c0_tilde / c0."""
    base = min_output_constants(m_bound, epsilon, beta, dim, smoothness,
                                c0, c0_tilde, f1_gap)
    factor = c0_tilde / c0
    return GradBoundConstants(base.gap_term * factor,
                              base.drift_coef * factor,
                              base.step_coef * factor)


def min_output_bound(constants: GradBoundConstants, eta, theta, K) -> float:
    """Evaluate the minimum-output bound at horizon K (or a grid of Ks)."""
    ks, s_eta, s_drift, s_sq, _ = _sums_for(eta, theta, np.atleast_1d(K))
    vals = (constants.gap_term + constants.drift_coef * s_drift
            + constants.step_coef * s_sq) / s_eta
    return float(vals[0]) if np.isscalar(K) else vals


def uniform_output_bound(constants: GradBoundConstants, eta, theta, K) -> float:
    """Evaluate the uniform-output bound at horizon K (or a grid of Ks)."""
    ks, _, s_drift, s_sq, eta_at = _sums_for(eta, theta, np.atleast_1d(K))
    denom = np.array(ks, dtype=float) * eta_at
    if np.any(denom <= 0):
        raise ValueError("K * eta_K must be positive")
    vals = (constants.gap_term + constants.drift_coef * s_drift
            + constants.step_coef * s_sq) / denom
    return float(vals[0]) if np.isscalar(K) else vals


@dataclass(frozen=True)
class PLBoundConstants:
    """Coefficients of the PL function-gap bound, plus the beta it uses."""

    momentum_coef: float    # heavy-ball interaction term
    drift_coef: float       # multiplies sum k (1 - theta_k)
    curvature_coef: float   # the L-smoothness term
    beta: float

    def to_dict(self):
        return {"momentum_coef": self.momentum_coef, "drift_coef": self.drift_coef,
                "curvature_coef": self.curvature_coef, "beta": self.beta}


def pl_constants(m_bound, epsilon, beta, smoothness, pl_modulus, dim) -> PLBoundConstants:
    """Constants of the PL-rate bound; needs a positive PL modulus."""
    _validate_common(m_bound, epsilon, beta, dim, smoothness)
    if not (pl_modulus > 0):
        raise ValueError("PL modulus must be positive")
    m2e = m_bound**2 + epsilon
    one_minus = 1.0 - beta
    momentum = (beta * smoothness * m_bound**2 * m2e
                / (one_minus**2 * pl_modulus**2 * epsilon))
    drift = (m_bound**4 * math.sqrt(dim * m2e)
             / (one_minus * pl_modulus * epsilon**1.5))
    curvature = (smoothness * m_bound**2 * m2e
                 / (2.0 * one_minus**2 * pl_modulus**2 * epsilon))
    return PLBoundConstants(momentum, drift, curvature, beta)


def pl_gap_bound(constants: PLBoundConstants, theta, K) -> float:
    """Evaluate the PL bound on the function gap after K steps (or a grid)."""
    ks = [int(k) for k in np.atleast_1d(K)]
    if any(b < a for a, b in zip(ks, ks[1:])):
        raise ValueError("evaluation grid must be non-decreasing")
    if ks[0] < 1:
        raise ValueError("K must be >= 1")
    theta_vals = schedule_values(theta, ks[-1])
    k_range = np.arange(1, ks[-1] + 1, dtype=float)
    s_kdrift = partial_sums(k_range * (1.0 - theta_vals), ks)
    one_minus_sq = (1.0 - constants.beta) ** 2
    karr = np.array(ks, dtype=float)
    vals = ((constants.momentum_coef / one_minus_sq + constants.curvature_coef)
            / (karr + 1.0)
            + constants.drift_coef / one_minus_sq * s_kdrift / (karr * (karr + 1.0)))
    return float(vals[0]) if np.isscalar(K) else vals


# ---------------------------------------------------------------------------
# brute-force inequality checks
# ---------------------------------------------------------------------------

_REL_SLACK = 1e-12


def geom_double_sum_check(beta: float, b) -> tuple:
    """Brute-force both geometric double-sum inequalities.

    lhs1 = sum_k sum_{j<=k} beta^(k-j) b_j        <= sum_k b_k / (1-beta)
    lhs2 = sum_k k sum_{j<=k} beta^(k-j) b_j      <= sum_k k b_k / (1-beta)^2

    Returns (lhs1, rhs1, lhs2, rhs2, both_hold).
    """
    if not (0.0 <= beta < 1.0):
        raise ValueError("beta must lie in [0, 1)")
    b = np.asarray(b, dtype=float)
    if np.any(b < 0):
        raise ValueError("the inequality needs a non-negative sequence")
    K = len(b)
    powers = beta ** np.arange(K)
    # inner[k] = sum_{j<=k} beta^(k-j) b_j, by direct convolution
    inner = np.convolve(b, powers)[:K]
    karr = np.arange(1, K + 1, dtype=float)
    lhs1 = float(np.sum(inner))
    rhs1 = float(np.sum(b) / (1.0 - beta))
    lhs2 = float(np.sum(karr * inner))
    rhs2 = float(np.sum(karr * b) / (1.0 - beta) ** 2)
    tol1 = _REL_SLACK * max(abs(rhs1), 1.0)
    tol2 = _REL_SLACK * max(abs(rhs2), 1.0)
    holds = (lhs1 <= rhs1 + tol1) and (lhs2 <= rhs2 + tol2)
    return lhs1, rhs1, lhs2, rhs2, holds


def gamma_products(gamma) -> np.ndarray:
    """Gamma_1 = 1, Gamma_k = (1 - gamma_k) Gamma_{k-1} for k >= 2."""
    gamma = np.asarray(gamma, dtype=float)
    if np.any((gamma <= 0) | (gamma > 1)):
        raise ValueError("gamma values must lie in (0, 1]")
    out = np.empty(len(gamma))
    out[0] = 1.0
    np.cumprod(1.0 - gamma[1:], out=out[1:])
    return out


def recursion_unroll_check(gamma, delta1: float, b) -> tuple:
    """Unroll Delta_{k+1} = (1 - gamma_k) Delta_k + B_k against its bound.

    The closed form is Gamma_K (1-gamma_1) Delta_1 + Gamma_K sum B_k/Gamma_k;
    for the equality recursion the two coincide, and any slack in the
    recursion only lowers the direct value.  Returns (direct, bound, holds).
    """
    gamma = np.asarray(gamma, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(gamma) != len(b):
        raise ValueError("gamma and B must have the same length")
    if np.any(b < 0) or not np.all(np.isfinite(b)):
        raise ValueError("B must be non-negative and finite")
    gam = gamma_products(gamma)  # validates the range
    direct = float(delta1)
    for g, bk in zip(gamma, b):
        direct = (1.0 - g) * direct + bk
    bound = gam[-1] * (1.0 - gamma[0]) * delta1 + gam[-1] * float(np.sum(b / gam))
    tol = _REL_SLACK * max(abs(bound), 1.0)
    return direct, bound, direct <= bound + tol


# ---------------------------------------------------------------------------
# trajectory audit against the pointwise inequalities
# ---------------------------------------------------------------------------

@dataclass
class TrajectoryAuditReport:
    steps_audited: int
    checks_run: int
    violations: list = field(default_factory=list)
    min_slack: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "steps_audited": self.steps_audited,
            "checks_run": self.checks_run,
            "violations": self.violations,
            "min_slack": self.min_slack,
            "passed": self.passed,
        }


def audit_trajectory(traj, problem, hp, rel_tol: float = 1e-9) -> TrajectoryAuditReport:
    """Verify the pointwise momentum/gradient inequalities along a run.

    At every audited step k (with the stored x^k, m^k, v^{k-1}, v^k):

    1. ||m^k|| <= M, ||v^k|| <= M^2, ||m^k / sqrt(v^k + eps)|| <= M/sqrt(eps)
    2. || (grad f)^2 / sqrt(v^{k-1} + eps) ||_1 >= ||grad f||^2 / sqrt(M^2 + eps)
    3. || m/sqrt(v^{k-1}+eps) - m/sqrt(v^k+eps) || <= sqrt(d) M^3 (1-theta_k) / eps^1.5

    These hold whenever the oracle draws stay norm-bounded by M; any
    violation beyond round-off indicates an implementation bug (or a
    trajectory that escaped the certified region).
    """
    if traj.audit is None:
        raise RuntimeError("trajectory was not recorded in audit mode")
    eps = hp.epsilon
    if eps <= 0:
        raise ValueError("the pointwise inequalities need epsilon > 0")
    m_bound = problem.m_bound
    d = problem.dim
    store = traj.audit
    thetas = schedule_values(hp.theta, int(store.ks[-1]))

    report = TrajectoryAuditReport(steps_audited=len(store.ks), checks_run=0)
    slack = {name: math.inf for name in
             ("m_norm", "v_norm", "scaled_m_norm", "grad_lower", "shift_upper")}

    def check(name, k, lhs, rhs):
        # inequality lhs <= rhs with relative round-off slack
        report.checks_run += 1
        margin = rhs - lhs
        slack[name] = min(slack[name], margin)
        if lhs > rhs + rel_tol * max(abs(rhs), 1.0):
            report.violations.append(
                {"k": int(k), "check": name, "lhs": lhs, "rhs": rhs}
            )

    for i, k in enumerate(store.ks):
        x, m, v_prev, v = store.x[i], store.m[i], store.v_prev[i], store.v[i]
        theta_k = thetas[int(k) - 1]
        g_true = problem.grad(x)
        gradsq = float(np.dot(g_true, g_true))

        check("m_norm", k, float(np.linalg.norm(m)), m_bound)
        check("v_norm", k, float(np.linalg.norm(v)), m_bound**2)
        check("scaled_m_norm", k,
              float(np.linalg.norm(m / np.sqrt(v + eps))),
              m_bound / math.sqrt(eps))
        lower = gradsq / math.sqrt(m_bound**2 + eps)
        lhs_l1 = float(np.sum(g_true * g_true / np.sqrt(v_prev + eps)))
        check("grad_lower", k, lower, lhs_l1)
        shift = float(np.linalg.norm(m / np.sqrt(v_prev + eps)
                                     - m / np.sqrt(v + eps)))
        check("shift_upper", k, shift,
              math.sqrt(d) * m_bound**3 * (1.0 - theta_k) / eps**1.5)

    report.min_slack = {k: (None if math.isinf(s) else float(s))
                        for k, s in slack.items()}
    return report


# ---------------------------------------------------------------------------
# empirical rate fitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RateFit:
    exponent: float
    r_squared: float
    zero_variance: bool = False
    flatness: Optional[float] = None  # max/min of the corrected series, log mode

    def to_dict(self):
        return {"exponent": self.exponent, "r_squared": self.r_squared,
                "zero_variance": self.zero_variance, "flatness": self.flatness}


def fit_rate(points, log_correction: bool = False) -> RateFit:
    """Least-squares decay exponent of value ~ K^p on a log-log scale.

    With ``log_correction`` the series is first multiplied by
    sqrt(K)/ln(K); a flat corrected series (flatness close to 1 over the
    last decade) identifies the ln K / sqrt(K) regime.
    """
    pts = [(float(k), float(v)) for k, v in points]
    if len(pts) < 3:
        raise ValueError("need at least 3 points")
    ks = np.array([p[0] for p in pts])
    vals = np.array([p[1] for p in pts])
    if np.any(np.diff(ks) <= 0):
        raise ValueError("K values must be strictly increasing")
    if np.any(vals <= 0):
        raise ValueError("values must be positive for a log-log fit")

    flat = None
    if log_correction:
        vals = vals * np.sqrt(ks) / np.log(ks)
        decade = ks >= ks[-1] / 10.0
        flat = float(np.max(vals[decade]) / np.min(vals[decade]))

    ly, lx = np.log(vals), np.log(ks)
    if np.ptp(ly) == 0.0:
        return RateFit(exponent=0.0, r_squared=1.0, zero_variance=True,
                       flatness=flat)
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return RateFit(exponent=float(slope), r_squared=r2, flatness=flat)
