import math

import numpy as np
import pytest

from adamlab.problems import (
    NoiseModel,
    builtin,
    certify_constants,
    finite_diff_check,
    grad_oracle,
)


class TestBuiltins:
    def test_unknown_id(self):
        with pytest.raises(KeyError):
            builtin("rosenbrock")

    def test_quadratic_closed_form(self):
        p = builtin("quadratic", dim=2)
        x = np.array([3.0, 4.0])
        assert p.f(x) == 12.5
        assert p.grad(x).tolist() == [3.0, 4.0]
        assert p.L_hat == 1.0 and p.pl_v_hat == 1.0 and p.f_star == 0.0

    def test_pl_sine_minimum(self):
        p = builtin("pl-sine", dim=1)
        assert p.f(np.array([0.0])) == 0.0 == p.f_star
        assert p.grad(np.array([0.0]))[0] == 0.0

    def test_bounded_nonconvex_gradient_peak(self):
        # max of 2t/(1+t^2)^2 over the reals is 9/(8 sqrt 3) at t = 1/sqrt 3
        p = builtin("bounded-nonconvex", dim=1)
        peak = 9.0 / (8.0 * math.sqrt(3.0))
        assert p.G_hat == pytest.approx(peak * 1.01, rel=1e-3)
        # brute-force confirmation on a dense grid
        ts = np.linspace(-20, 20, 400_001)
        assert np.max(np.abs(2 * ts / (1 + ts**2) ** 2)) == pytest.approx(
            peak, rel=1e-6)
        assert p.box_radius is None  # constants are global

    def test_gradient_bound_lifts_with_sqrt_dim(self):
        p1 = builtin("bounded-nonconvex", dim=1)
        p9 = builtin("bounded-nonconvex", dim=9)
        assert p9.G_hat == pytest.approx(3.0 * p1.G_hat)

    def test_pl_sine_certified_modulus_positive(self):
        p = builtin("pl-sine", dim=2, box_radius=10.0)
        assert p.pl_v_hat is not None and p.pl_v_hat > 0
        # the modulus certifies the inequality on a fresh grid
        ts = np.linspace(-10, 10, 30_001)
        gap = ts**2 + 3 * np.sin(ts) ** 2
        grad_sq = (2 * ts + 3 * np.sin(2 * ts)) ** 2
        mask = gap > 1e-9
        assert np.all(grad_sq[mask] >= 2 * p.pl_v_hat * gap[mask])

    def test_pl_inequality_in_dim2(self):
        p = builtin("pl-sine", dim=2, box_radius=10.0)
        rng = np.random.default_rng(5)
        xs = rng.uniform(-10, 10, size=(4000, 2))
        for x in xs:
            gap = p.f_gap(x)
            if gap > 1e-9:
                assert float(np.dot(p.grad(x), p.grad(x))) >= 2 * p.pl_v_hat * gap

    def test_lower_bound(self):
        rng = np.random.default_rng(1)
        for pid in ("quadratic", "bounded-nonconvex", "pl-sine"):
            p = builtin(pid, dim=3)
            for x in rng.uniform(-10, 10, size=(200, 3)):
                assert p.f(x) >= p.f_star

    def test_certify_matches_construction(self):
        p = builtin("pl-sine", dim=2, box_radius=10.0)
        fresh = certify_constants(p)
        assert fresh["L_hat"] == pytest.approx(p.L_hat, rel=1e-6)
        assert fresh["G_hat"] == pytest.approx(p.G_hat, rel=1e-6)
        assert fresh["pl_v_hat"] == pytest.approx(p.pl_v_hat, rel=1e-6)

    def test_pl_sine_smoothness_near_8(self):
        # second derivative 2 + 6 cos(2t) peaks at 8
        p = builtin("pl-sine", dim=1)
        assert p.L_hat == pytest.approx(8.0 * 1.01, rel=1e-3)

    def test_pl_inequality_along_trajectory(self):
        from adamlab.optimizer import run
        from adamlab.schedules import (ConstantBeta, HyperParams, PowerEta,
                                       PowerTheta)
        p = builtin("pl-sine", dim=2, sigma=0.1)
        hp = HyperParams(PowerEta(exponent=0.5), PowerTheta(1.0),
                         ConstantBeta(0.9), 1.0, 0.9)
        traj = run(p, hp, seed=4, iterations=3000,
                   noise=NoiseModel("uniform-ball", 0.1))
        assert traj.first_box_exit is None
        grad_sq = traj.columns["grad_norm"] ** 2
        gap = traj.columns["f_gap"]
        mask = gap > 1e-9
        assert np.all(grad_sq[mask] >= 2 * p.pl_v_hat * gap[mask])


class TestOracle:
    def test_noiseless_reduction(self):
        p = builtin("quadratic", dim=3)
        rng = np.random.default_rng(0)
        x = np.array([1.0, -2.0, 0.5])
        g = grad_oracle(p, x, NoiseModel("none", 0.0), rng)
        assert g.tolist() == x.tolist()

    def test_every_draw_within_ball(self):
        p = builtin("pl-sine", dim=4, sigma=0.1)
        rng = np.random.default_rng(7)
        x = np.array([1.0, 2.0, -0.5, 0.3])
        gf = p.grad(x)
        for _ in range(2000):
            g = grad_oracle(p, x, NoiseModel("uniform-ball", 0.1), rng)
            assert np.linalg.norm(g - gf) <= 0.1 + 1e-12

    def test_rademacher_norm_exact(self):
        rng = np.random.default_rng(3)
        noise = NoiseModel("rademacher-coords", 0.2)
        for _ in range(100):
            z = noise.sample(rng, 5)
            assert np.linalg.norm(z) == pytest.approx(0.2)

    def test_unbiasedness_monte_carlo(self):
        # coordinate-wise mean of the noise within a CLT band
        rng = np.random.default_rng(11)
        noise = NoiseModel("uniform-ball", 0.1)
        n = 100_000
        draws = np.stack([noise.sample(rng, 3) for _ in range(n)])
        tol = 4 * 0.1 / math.sqrt(n)
        assert np.all(np.abs(draws.mean(axis=0)) < tol)

    def test_hard_bound_inside_box(self):
        p = builtin("pl-sine", dim=2, box_radius=10.0, sigma=0.1)
        rng = np.random.default_rng(13)
        noise = NoiseModel("uniform-ball", 0.1)
        for _ in range(500):
            x = rng.uniform(-10, 10, size=2)
            g = grad_oracle(p, x, noise, rng)
            assert np.linalg.norm(g) <= p.m_bound + 1e-12

    def test_unknown_kind(self):
        with pytest.raises(KeyError):
            NoiseModel("gaussian", 0.1)


class TestFiniteDiff:
    def test_quadratic_tight(self):
        p = builtin("quadratic", dim=3)
        assert finite_diff_check(p, np.array([0.3, -1.2, 2.0]), 1e-5) < 1e-8

    def test_pl_sine_smooth(self):
        p = builtin("pl-sine", dim=2)
        assert finite_diff_check(p, np.array([1.0, 2.0]), 1e-5) < 1e-6

    def test_at_symmetric_minimum(self):
        p = builtin("pl-sine", dim=2)
        assert finite_diff_check(p, np.array([0.0, 0.0]), 1e-5) < 1e-8

    def test_bad_h(self):
        p = builtin("quadratic", dim=1)
        with pytest.raises(ValueError):
            finite_diff_check(p, np.array([1.0]), 0.0)
