import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adamlab.bounds import (
    audit_trajectory,
    fit_rate,
    gamma_products,
    geom_double_sum_check,
    min_output_bound,
    min_output_constants,
    partial_sums,
    pl_constants,
    pl_gap_bound,
    recursion_unroll_check,
    uniform_output_bound,
    uniform_output_constants,
)
from adamlab.optimizer import run
from adamlab.problems import NoiseModel, builtin
from adamlab.schedules import (
    ConstantBeta,
    HyperParams,
    PowerEta,
    PowerTheta,
)

ARGS = dict(m_bound=1.0, epsilon=1.0, beta=0.9, dim=1, smoothness=1.0,
            c0=1.0, c0_tilde=1.0, f1_gap=1.0)


class TestConstants:
    def test_min_output_values(self):
        c = min_output_constants(**ARGS)
        assert c.gap_term == pytest.approx(math.sqrt(2) / 0.1)          # 14.1421
        assert c.drift_coef == pytest.approx(math.sqrt(2) / 0.01)       # 141.421
        assert c.step_coef == pytest.approx(2 * math.sqrt(2) / 0.01)    # 282.843

    def test_uniform_equals_min_when_factors_match(self):
        a = min_output_constants(**ARGS)
        b = uniform_output_constants(**ARGS)
        assert (a.gap_term, a.drift_coef, a.step_coef) == (
            b.gap_term, b.drift_coef, b.step_coef)

    def test_uniform_scales_by_factor_ratio(self):
        wide = dict(ARGS, c0=0.5, c0_tilde=2.0)
        a = min_output_constants(**wide)
        b = uniform_output_constants(**wide)
        assert b.gap_term == pytest.approx(4.0 * a.gap_term)
        assert b.drift_coef == pytest.approx(4.0 * a.drift_coef)
        assert b.step_coef == pytest.approx(4.0 * a.step_coef)

    def test_pl_curvature_value(self):
        c = pl_constants(m_bound=1.0, epsilon=1.0, beta=0.9, smoothness=1.0,
                         pl_modulus=0.5, dim=1)
        assert c.curvature_coef == pytest.approx(400.0)
        assert c.momentum_coef == pytest.approx(720.0)
        assert c.drift_coef == pytest.approx(2 * math.sqrt(2) / 0.1)

    def test_validation(self):
        with pytest.raises(ValueError):
            min_output_constants(**dict(ARGS, epsilon=0.0))
        with pytest.raises(ValueError):
            min_output_constants(**dict(ARGS, beta=1.0))
        with pytest.raises(ValueError):
            min_output_constants(**dict(ARGS, c0=2.0, c0_tilde=1.0))
        with pytest.raises(ValueError):
            pl_constants(1.0, 1.0, 0.9, 1.0, 0.0, 1)


class TestBoundEvaluators:
    def test_single_term(self):
        c = min_output_constants(**ARGS)
        eta, theta = PowerEta(exponent=0.5), PowerTheta(1.0)
        e1, t1 = 1.0, 0.5  # theta_1 uses the shifted value
        expect = (c.gap_term + c.drift_coef * e1 * (1 - t1)
                  + c.step_coef * e1**2) / e1
        assert min_output_bound(c, eta, theta, 1) == pytest.approx(expect)
        cu = uniform_output_constants(**ARGS)
        assert uniform_output_bound(cu, eta, theta, 1) == pytest.approx(expect)

    def test_saturated_theta_drops_drift_term(self):
        # theta = 1 kills the drift term; with constant eta the bound is
        # (gap + step * K * eta^2) / (K * eta)
        c = min_output_constants(**ARGS)
        K, eta_val = 50, 0.2
        eta = np.full(K, eta_val)
        theta = np.ones(K)
        expect = (c.gap_term + c.step_coef * K * eta_val**2) / (K * eta_val)
        assert min_output_bound(c, eta, theta, K) == pytest.approx(expect)

    def test_pl_saturated_theta(self):
        c = pl_constants(1.0, 1.0, 0.9, 1.0, 0.5, 1)
        K = 100
        theta = np.ones(K)
        expect = (c.momentum_coef / 0.01 + c.curvature_coef) / (K + 1)
        assert pl_gap_bound(c, theta, K) == pytest.approx(expect)

    def test_root_log_asymptotics(self):
        # eta = 1/sqrt k, theta = 1 - 1/k: bound scales like ln K / sqrt K
        c = min_output_constants(**ARGS)
        eta, theta = PowerEta(exponent=0.5), PowerTheta(1.0)
        b4 = min_output_bound(c, eta, theta, 10_000)
        b6 = min_output_bound(c, eta, theta, 1_000_000)
        expect_ratio = (math.log(1e6) / math.sqrt(1e6)) / (
            math.log(1e4) / math.sqrt(1e4))
        assert b6 / b4 == pytest.approx(expect_ratio, rel=0.15)

    def test_grid_evaluation_matches_scalars(self):
        c = min_output_constants(**ARGS)
        eta, theta = PowerEta(exponent=0.3), PowerTheta(1.0)
        grid = np.array([10, 100, 1000])
        vals = min_output_bound(c, eta, theta, grid)
        for k, v in zip(grid, vals):
            assert v == pytest.approx(min_output_bound(c, eta, theta, int(k)))

    def test_monotone_in_each_constant(self):
        from adamlab.bounds import GradBoundConstants
        base = min_output_constants(**ARGS)
        eta, theta = PowerEta(exponent=0.5), PowerTheta(1.0)
        v0 = min_output_bound(base, eta, theta, 500)
        for bump in ("gap_term", "drift_coef", "step_coef"):
            kw = base.to_dict()
            kw[bump] *= 2.0
            v1 = min_output_bound(GradBoundConstants(**kw), eta, theta, 500)
            assert v1 >= v0

    def test_partial_sums_compensated(self):
        vals = np.full(10**6, 0.1)
        (s,) = partial_sums(vals, [10**6])
        assert s == pytest.approx(1e5, rel=1e-12)


class TestDoubleSumInequality:
    def test_hand_example(self):
        lhs1, rhs1, lhs2, rhs2, holds = geom_double_sum_check(0.5, [1.0, 1.0, 1.0])
        assert lhs1 == pytest.approx(4.25)
        assert rhs1 == pytest.approx(6.0)
        assert lhs2 == pytest.approx(9.25)
        assert rhs2 == pytest.approx(24.0)
        assert holds

    def test_beta_zero_equality(self):
        b = [0.3, 1.8, 0.1]
        lhs1, rhs1, *_ , holds = geom_double_sum_check(0.0, b)
        assert lhs1 == pytest.approx(rhs1) == pytest.approx(sum(b))
        assert holds

    def test_random_instances(self):
        rng = np.random.default_rng(12)
        for _ in range(2000):
            beta = rng.uniform(0, 0.99)
            b = rng.uniform(0, 10, rng.integers(1, 201))
            *_, holds = geom_double_sum_check(beta, b)
            assert holds

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            geom_double_sum_check(0.5, [1.0, -0.1])


class TestRecursionUnroll:
    def test_remark_products(self):
        k = np.arange(1, 5)
        gam = gamma_products(2.0 / (k + 1.0))
        assert gam[-1] == pytest.approx(2.0 / (4 * 5))
        assert gam.tolist() == pytest.approx((2.0 / (k * (k + 1.0))).tolist())

    def test_gamma1_term_vanishes(self):
        # gamma_1 = 1 kills the Delta_1 contribution entirely
        gamma = 2.0 / (np.arange(1, 20) + 1.0)
        d_a, b_a, _ = recursion_unroll_check(gamma, 0.0, np.ones(19))
        d_b, b_b, _ = recursion_unroll_check(gamma, 123.4, np.ones(19))
        assert b_a == pytest.approx(b_b)
        assert d_a == pytest.approx(d_b)

    def test_exact_unrolling_is_tight(self):
        rng = np.random.default_rng(3)
        for _ in range(500):
            K = rng.integers(1, 100)
            gamma = rng.uniform(1e-4, 1 - 1e-9, K)
            b = rng.uniform(0, 5, K)
            direct, bound, holds = recursion_unroll_check(gamma, rng.uniform(0, 10), b)
            assert holds
            assert direct == pytest.approx(bound, rel=1e-9)

    def test_homogeneous_case(self):
        gamma = np.full(10, 0.25)
        direct, bound, holds = recursion_unroll_check(gamma, 2.0, np.zeros(10))
        assert holds
        assert direct == pytest.approx(2.0 * 0.75**10)

    def test_bad_gamma(self):
        with pytest.raises(ValueError):
            recursion_unroll_check([0.5, 1.5], 1.0, [0.0, 0.0])


class TestTrajectoryAudit:
    def _run(self, pid, dim, sigma, K=2000, seed=0):
        prob = builtin(pid, dim=dim, sigma=sigma)
        hp = HyperParams(PowerEta(exponent=0.5), PowerTheta(1.0),
                         ConstantBeta(0.9), 1.0, 0.9)
        noise = NoiseModel("uniform-ball", sigma) if sigma else NoiseModel("none")
        traj = run(prob, hp, seed=seed, iterations=K, noise=noise, audit=True)
        return traj, prob, hp

    def test_zero_violations_on_bounded_run(self):
        traj, prob, hp = self._run("bounded-nonconvex", 4, 0.1)
        rep = audit_trajectory(traj, prob, hp)
        assert rep.passed
        assert rep.checks_run == 5 * rep.steps_audited

    def test_first_step_has_slack(self):
        traj, prob, hp = self._run("quadratic", 2, 0.0, K=5)
        rep = audit_trajectory(traj, prob, hp)
        assert rep.passed
        assert all(s is None or s >= 0 for s in rep.min_slack.values())

    def test_requires_audit_mode(self):
        prob = builtin("quadratic", dim=1)
        hp = HyperParams(PowerEta(exponent=0.5), PowerTheta(1.0),
                         ConstantBeta(0.9), 1.0, 0.9)
        traj = run(prob, hp, 0, 50)
        with pytest.raises(RuntimeError):
            audit_trajectory(traj, prob, hp)

    def test_lower_bound_equality_condition(self):
        # with v^{k-1} identically M^2 and eps > 0 the l1 lower bound is
        # attained with equality
        prob = builtin("quadratic", dim=3, sigma=0.0)
        m_bound = prob.m_bound
        x = np.array([1.0, 2.0, -1.5])
        g = prob.grad(x)
        v_prev = np.full(3, m_bound**2)
        eps = 1.0
        lhs = float(np.sum(g * g / np.sqrt(v_prev + eps)))
        rhs = float(np.dot(g, g)) / math.sqrt(m_bound**2 + eps)
        assert lhs == pytest.approx(rhs, rel=1e-12)


class TestRateFit:
    def test_exact_power_law(self):
        pts = [(K, 5.0 / math.sqrt(K)) for K in (10, 100, 1000)]
        fit = fit_rate(pts)
        assert fit.exponent == pytest.approx(-0.5)
        assert fit.r_squared == pytest.approx(1.0)

    def test_constant_series(self):
        fit = fit_rate([(10, 2.0), (100, 2.0), (1000, 2.0)])
        assert fit.exponent == 0.0
        assert fit.zero_variance
        assert fit.r_squared == 1.0

    def test_log_correction_flatness(self):
        ks = np.geomspace(1e3, 1e6, 13).astype(int)
        pts = [(int(K), math.log(K) / math.sqrt(K)) for K in ks]
        fit = fit_rate(pts, log_correction=True)
        assert fit.flatness == pytest.approx(1.0, abs=1e-9)

    def test_bound_series_small_exponent(self):
        c = min_output_constants(**ARGS)
        ks = np.unique(np.geomspace(1e3, 1e6, 13).astype(int))
        vals = min_output_bound(c, PowerEta(exponent=0.3), PowerTheta(1.0), ks)
        fit = fit_rate(list(zip(ks, vals)))
        assert fit.exponent == pytest.approx(-0.3, abs=0.05)

    def test_validation(self):
        with pytest.raises(ValueError):
            fit_rate([(10, 1.0), (100, 2.0)])
        with pytest.raises(ValueError):
            fit_rate([(10, 1.0), (100, -2.0), (1000, 1.0)])
        with pytest.raises(ValueError):
            fit_rate([(10, 1.0), (10, 2.0), (1000, 1.0)])


@settings(max_examples=200, deadline=None)
@given(beta=st.floats(0.0, 0.99),
       b=st.lists(st.floats(0.0, 10.0), min_size=1, max_size=60))
def test_double_sum_property(beta, b):
    *_, holds = geom_double_sum_check(beta, b)
    assert holds


@settings(max_examples=200, deadline=None)
@given(data=st.data(), k=st.integers(1, 40))
def test_recursion_with_slack_stays_below(data, k):
    """If the recursion has slack, the direct value drops below the bound."""
    gamma = np.array(data.draw(st.lists(
        st.floats(1e-3, 1.0 - 1e-6), min_size=k, max_size=k)))
    b = np.array(data.draw(st.lists(
        st.floats(0.0, 5.0), min_size=k, max_size=k)))
    slack = np.array(data.draw(st.lists(
        st.floats(0.0, 1.0), min_size=k, max_size=k)))
    delta1 = data.draw(st.floats(0.0, 10.0))
    direct = delta1
    for g, bk, sl in zip(gamma, b, slack):
        direct = (1.0 - g) * direct + max(bk - sl, 0.0)
    _, bound, _ = recursion_unroll_check(gamma, delta1, b)
    assert direct <= bound + 1e-9 * max(1.0, abs(bound))
