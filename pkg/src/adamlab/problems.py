"""Synthetic objectives with bounded stochastic gradient oracles.

Each built-in problem is a separable sum of one identical coordinate
function, which lets every constant be certified on a dense 1-D grid and
lifted exactly to d dimensions:

* the gradient bound scales with sqrt(d) (attained at a box corner),
* the smoothness constant is the per-coordinate one (diagonal Hessian),
* the PL modulus is the per-coordinate one (mediant inequality).

The constants hold on the certification box [-R, R]^d.  A global PL
modulus, a global gradient bound and global smoothness cannot coexist
for a non-constant objective, so the oracle bound M = G_hat + sigma is
only guaranteed while iterates remain inside the box; runs that leave it
are flagged by the harness rather than silently trusted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "Problem",
    "NoiseModel",
    "CertificationError",
    "builtin",
    "grad_oracle",
    "certify_constants",
    "finite_diff_check",
]

BUILTIN_IDS = ("quadratic", "bounded-nonconvex", "pl-sine")


class CertificationError(RuntimeError):
    """Grid certification did not stabilise at the requested resolution."""


@dataclass(frozen=True)
class Problem:
    """Objective + gradient with machine-certified constants.

    ``box_radius`` is the half-width of the certification region; ``None``
    means the constants hold globally (only possible when the gradient is
    globally bounded).  ``m_bound`` = G_hat + sigma is the almost-sure
    bound on oracle draws inside the box.
    """

    id: str
    dim: int
    f: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    f_star: float
    L_hat: float
    G_hat: float
    sigma: float
    pl_v_hat: Optional[float]
    box_radius: Optional[float]

    @property
    def m_bound(self) -> float:
        return self.G_hat + self.sigma

    def f_gap(self, x: np.ndarray) -> float:
        return float(self.f(x)) - self.f_star

    def in_box(self, x: np.ndarray) -> bool:
        if self.box_radius is None:
            return True
        return bool(np.all(np.abs(x) <= self.box_radius))

    def constants_dict(self) -> dict:
        return {
            "id": self.id,
            "dim": self.dim,
            "f_star": self.f_star,
            "L_hat": self.L_hat,
            "G_hat": self.G_hat,
            "sigma": self.sigma,
            "M": self.m_bound,
            "pl_v_hat": self.pl_v_hat,
            "box_radius": self.box_radius,
        }


@dataclass(frozen=True)
class NoiseModel:
    """Zero-mean perturbation with a hard norm bound ||zeta|| <= sigma."""

    kind: str = "uniform-ball"
    sigma: float = 0.0

    def __post_init__(self):
        if self.kind not in ("uniform-ball", "rademacher-coords", "none"):
            raise KeyError(f"unknown noise kind {self.kind!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")

    def sample(self, rng: np.random.Generator, dim: int) -> np.ndarray:
        if self.sigma == 0.0 or self.kind == "none":
            return np.zeros(dim)
        if self.kind == "uniform-ball":
            direction = rng.standard_normal(dim)
            norm = np.linalg.norm(direction)
            if norm == 0.0:
                return np.zeros(dim)
            radius = self.sigma * rng.random() ** (1.0 / dim)
            return direction * (radius / norm)
        # rademacher-coords: +-sigma/sqrt(d) per coordinate, ||zeta|| = sigma
        signs = rng.integers(0, 2, dim) * 2 - 1
        return signs * (self.sigma / math.sqrt(dim))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "sigma": self.sigma}


# ---------------------------------------------------------------------------
# coordinate functions of the built-in problems
# ---------------------------------------------------------------------------

def _quad_f(x):
    return 0.5 * float(np.dot(x, x))


def _quad_grad(x):
    return np.asarray(x, dtype=float).copy()


def _bnc_f(x):
    x2 = x * x
    return float(np.sum(x2 / (1.0 + x2)))


def _bnc_grad(x):
    return 2.0 * x / (1.0 + x * x) ** 2


def _plsine_f(x):
    return float(np.sum(x * x + 3.0 * np.sin(x) ** 2))


def _plsine_grad(x):
    return 2.0 * x + 3.0 * np.sin(2.0 * x)


_COORD_1D = {
    # id -> (f_1d, grad_1d, has_pl)
    "quadratic": (lambda t: 0.5 * t * t, lambda t: t, True),
    "bounded-nonconvex": (
        lambda t: t * t / (1.0 + t * t),
        lambda t: 2.0 * t / (1.0 + t * t) ** 2,
        False,
    ),
    "pl-sine": (
        lambda t: t * t + 3.0 * np.sin(t) ** 2,
        lambda t: 2.0 * t + 3.0 * np.sin(2.0 * t),
        True,
    ),
}

_EVALUATORS = {
    "quadratic": (_quad_f, _quad_grad),
    "bounded-nonconvex": (_bnc_f, _bnc_grad),
    "pl-sine": (_plsine_f, _plsine_grad),
}

_SAFETY = 0.01        # inflate upper bounds / deflate the PL modulus by 1%
_PL_FLOOR = 1e-12     # exclude near-minimisers from the PL infimum
_REFINE_TOL = 1e-3    # certified values must move < 0.1% under halving


def _certify_1d(problem_id: str, radius: float, resolution: float):
    """Grid-certify (G_1, L_1, v_1) for one coordinate on [-radius, radius].

    The grid is refined (halved) until all certified values move by less
    than 0.1%, cross-validating the resolution.
    """
    f1, g1, has_pl = _COORD_1D[problem_id]

    def at(res):
        n = max(64, int(math.ceil(2.0 * radius / res)) + 1)
        ts = np.linspace(-radius, radius, n)
        gv = g1(ts)
        fv = f1(ts)
        g_max = float(np.max(np.abs(gv)))
        # curvature from difference quotients of the gradient between
        # neighbouring grid points
        l_max = float(np.max(np.abs(np.diff(gv) / np.diff(ts))))
        v_min = None
        if has_pl:
            gap = fv - 0.0
            mask = gap > _PL_FLOOR
            if not np.any(mask):
                raise CertificationError("PL grid contains only near-minimisers")
            v_min = float(np.min(gv[mask] ** 2 / (2.0 * gap[mask])))
        return g_max, l_max, v_min

    res = resolution
    prev = at(res)
    for _ in range(12):
        res /= 2.0
        cur = at(res)
        moves = [
            abs(c - p) / max(abs(p), 1e-300)
            for c, p in zip(cur, prev)
            if c is not None and p is not None
        ]
        if max(moves) < _REFINE_TOL:
            g_max, l_max, v_min = cur
            return (
                g_max * (1.0 + _SAFETY),
                l_max * (1.0 + _SAFETY),
                None if v_min is None else v_min * (1.0 - _SAFETY),
            )
        prev = cur
    raise CertificationError(
        f"certification for {problem_id!r} did not stabilise below {_REFINE_TOL:%}"
    )


def builtin(problem_id: str, dim: int = 1, box_radius: float = 10.0,
            sigma: float = 0.0, grid_resolution: float = 1e-3) -> Problem:
    """Construct a built-in problem with certified constants.

    quadratic          f = ||x||^2 / 2, exact constants L = 1, v = 1.
    bounded-nonconvex  f = sum x_i^2/(1+x_i^2); globally bounded gradient,
                       non-convex, no PL modulus.
    pl-sine            f = sum (x_i^2 + 3 sin^2 x_i); PL on the box.
    """
    if problem_id not in BUILTIN_IDS:
        raise KeyError(f"unknown problem id {problem_id!r}")
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if box_radius is not None and box_radius <= 0:
        raise ValueError("box_radius must be positive")
    f, grad = _EVALUATORS[problem_id]

    if problem_id == "quadratic":
        # closed forms: |grad| = |x| <= R per coordinate, L = 1,
        # ||grad||^2 = 2 f exactly so v = 1
        radius = 10.0 if box_radius is None else box_radius
        return Problem(
            id=problem_id, dim=dim, f=f, grad=grad, f_star=0.0,
            L_hat=1.0, G_hat=radius * math.sqrt(dim), sigma=sigma,
            pl_v_hat=1.0, box_radius=box_radius,
        )

    if problem_id == "bounded-nonconvex":
        # the gradient 2t/(1+t^2)^2 peaks at |t| = 1/sqrt(3) and decays in
        # the tails, so a window certification is global; same for the
        # curvature, which peaks at t = 0
        g1, l1, _ = _certify_1d(problem_id, max(20.0, box_radius or 0.0),
                                grid_resolution)
        return Problem(
            id=problem_id, dim=dim, f=f, grad=grad, f_star=0.0,
            L_hat=l1, G_hat=g1 * math.sqrt(dim), sigma=sigma,
            pl_v_hat=None, box_radius=None,
        )

    radius = 10.0 if box_radius is None else box_radius
    g1, l1, v1 = _certify_1d(problem_id, radius, grid_resolution)
    return Problem(
        id=problem_id, dim=dim, f=f, grad=grad, f_star=0.0,
        L_hat=l1, G_hat=g1 * math.sqrt(dim), sigma=sigma,
        pl_v_hat=v1, box_radius=radius,
    )


def certify_constants(problem: Problem, grid_resolution: float = 1e-3) -> dict:
    """Re-run the grid certification for a built-in problem.

    Returns {"L_hat", "G_hat", "pl_v_hat"}; for the quadratic these are the
    exact values.
    """
    if problem.id == "quadratic":
        radius = problem.box_radius or 10.0
        return {"L_hat": 1.0, "G_hat": radius * math.sqrt(problem.dim),
                "pl_v_hat": 1.0}
    radius = problem.box_radius if problem.box_radius is not None else 20.0
    g1, l1, v1 = _certify_1d(problem.id, max(radius, 1.0), grid_resolution)
    return {
        "L_hat": l1,
        "G_hat": g1 * math.sqrt(problem.dim),
        "pl_v_hat": v1,
    }


def grad_oracle(problem: Problem, x: np.ndarray, noise: NoiseModel,
                rng: np.random.Generator) -> np.ndarray:
    """One stochastic gradient draw g = grad f(x) + zeta, ||zeta|| <= sigma."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("oracle evaluated at a non-finite point")
    g = problem.grad(x)
    if noise.sigma == 0.0:
        return g
    return g + noise.sample(rng, problem.dim)


def finite_diff_check(problem: Problem, x: np.ndarray, h: float = 1e-5) -> float:
    """Max relative error between the gradient and central differences."""
    if h <= 0:
        raise ValueError("h must be positive")
    x = np.asarray(x, dtype=float)
    g = problem.grad(x)
    worst = 0.0
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        approx = (problem.f(x + e) - problem.f(x - e)) / (2.0 * h)
        err = abs(g[i] - approx) / (1.0 + abs(g[i]))
        worst = max(worst, err)
    return worst
