"""Fixed-scale M descent and the S + M composition."""

import numpy as np
import pytest

from robreg import (
    MMFitConfig,
    MScaleSpec,
    RegressionProblem,
    RhoKernel,
    SFitConfig,
    fit_least_squares,
    fit_mm,
    fit_mm_given_scale,
    objective_ln,
    scale_equation,
)
from robreg.exceptions import ConfigurationError, DegenerateDesignError
from robreg.mmfit import gradient_norm

from oracles import box_grid, grid_mm_objective

RHO0 = RhoKernel("bisquare", 1.547)
RHO1 = RhoKernel("bisquare", 4.685)
SPEC = MScaleSpec(RHO0, b=0.5)


def make_problem(n, p, seed, noise=0.5):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    beta = rng.uniform(-1.0, 1.0, size=p)
    y = x @ beta + noise * rng.standard_normal(n)
    return RegressionProblem(x, y), beta


class TestObjective:
    def test_matches_naive_summation(self):
        prob, beta = make_problem(40, 3, 1)
        val = objective_ln(prob, RHO1, beta, 1.3)
        naive = 0.0
        for xi, yi in zip(prob.x, prob.y):
            naive += RHO1.rho((yi - xi @ beta) / 1.3)
        assert val == pytest.approx(naive, abs=1e-12)

    def test_zero_residuals(self):
        prob, beta = make_problem(30, 2, 2, noise=0.0)
        assert objective_ln(prob, RHO1, beta, 2.0) == 0.0

    def test_saturated_residuals(self):
        x = np.ones((10, 1))
        y = np.full(10, 100.0)
        prob = RegressionProblem(x, y)
        # all |r| = 100 >= c * s with s = 1: every loss saturates at 1
        assert objective_ln(prob, RHO1, [0.0], 1.0) == 10.0

    def test_requires_positive_scale(self):
        prob, beta = make_problem(20, 2, 3)
        with pytest.raises(ValueError):
            objective_ln(prob, RHO1, beta, 0.0)


class TestFixedScaleDescent:
    def test_huge_c_recovers_least_squares(self):
        prob, _ = make_problem(60, 4, 11)
        flat = RhoKernel("bisquare", 1e6)
        fit = fit_mm_given_scale(prob, MMFitConfig(flat), np.zeros(4), 1.0)
        # normal-equations oracle
        ls = np.linalg.solve(prob.x.T @ prob.x, prob.x.T @ prob.y)
        np.testing.assert_allclose(fit.beta, ls, atol=1e-4)

    def test_symmetric_intercept_only(self):
        prob = RegressionProblem(np.ones((3, 1)), np.array([-1.0, 0.0, 1.0]))
        # the objective is quadratically flat at 0, so drive the stop by beta
        config = MMFitConfig(RHO1, objective_tol=1e-18)
        fit = fit_mm_given_scale(prob, config, np.array([0.3]), 1.0)
        assert abs(fit.beta[0]) <= 1e-8

    def test_p1_grid_oracle(self):
        for seed in (21, 22, 23):
            prob, _ = make_problem(20, 1, seed)
            s = 0.6
            ls = fit_least_squares(prob)
            fit = fit_mm_given_scale(prob, MMFitConfig(RHO1), ls.beta, s)
            grid = box_grid(ls.beta, 2.0, 100_001)
            oracle = grid_mm_objective(prob.x, prob.y, RHO1.rho, s, grid).min()
            assert fit.objective <= oracle + 1e-6

    def test_trace_nonincreasing_and_gradient(self):
        for seed in range(6):
            prob, _ = make_problem(80, 3, 100 + seed)
            fit = fit_mm_given_scale(prob, MMFitConfig(RHO1), np.zeros(3), 0.8)
            objs = [t[1] for t in fit.trace]
            assert all(b <= a for a, b in zip(objs, objs[1:]))
            assert fit.converged
            g = gradient_norm(prob, RHO1, fit.beta, fit.scale)
            assert g <= 1e-6 * np.sqrt(prob.n) * prob.p

    def test_unconverged_flag_on_tiny_budget(self):
        prob, _ = make_problem(200, 5, 12, noise=2.0)
        fit = fit_mm_given_scale(prob, MMFitConfig(RHO1, max_iter=1), np.zeros(5), 0.5)
        assert not fit.converged
        assert fit.iterations <= 1

    def test_singular_weighted_system(self):
        base = np.linspace(1.0, 2.0, 8)
        x = np.column_stack([base, 2.0 * base])
        prob = RegressionProblem(x, np.arange(8.0))
        with pytest.raises(DegenerateDesignError):
            fit_mm_given_scale(prob, MMFitConfig(RHO1), np.zeros(2), 1.0)

    def test_input_validation(self):
        prob, _ = make_problem(20, 2, 13)
        with pytest.raises(ValueError):
            fit_mm_given_scale(prob, MMFitConfig(RHO1), np.zeros(2), -1.0)
        with pytest.raises(ValueError):
            fit_mm_given_scale(prob, MMFitConfig(RHO1), np.array([np.nan, 0.0]), 1.0)


class TestComposition:
    def test_dominance_enforced(self):
        prob, _ = make_problem(40, 2, 31)
        s_conf = SFitConfig(MScaleSpec(RhoKernel("bisquare", 2.0)), seed=0)
        with pytest.raises(ConfigurationError):
            fit_mm(prob, s_conf, MMFitConfig(RhoKernel("bisquare", 1.0)))

    def test_never_worse_than_initializer(self):
        prob, _ = make_problem(90, 4, 32)
        fit = fit_mm(prob, SFitConfig(SPEC, seed=1), MMFitConfig(RHO1))
        assert fit.trace[-1][1] <= fit.trace[0][1]
        assert fit.method == "mm"
        assert fit.scale > 0

    def test_equal_losses_give_s_refit(self):
        prob, _ = make_problem(70, 3, 33)
        fit = fit_mm(prob, SFitConfig(SPEC, seed=2), MMFitConfig(RHO0))
        # the scale equation still holds at the refit coefficients
        assert abs(scale_equation(SPEC, prob.residuals(fit.beta), fit.scale)) <= 1e-6

    def test_exact_fit_passthrough(self):
        rng = np.random.default_rng(34)
        x = rng.standard_normal((30, 2))
        beta_true = np.array([2.0, -1.0])
        y = x @ beta_true
        y[20:] = 500.0
        prob = RegressionProblem(x, y)
        fit = fit_mm(prob, SFitConfig(SPEC, seed=3), MMFitConfig(RHO1))
        assert fit.exact_fit and fit.method == "mm"
        np.testing.assert_allclose(fit.beta, beta_true, atol=1e-8)

    def test_vertical_outliers_resisted(self):
        beta0 = np.ones(5) / np.sqrt(5)
        clean_errs = []
        for seed in range(9):
            rng = np.random.default_rng(200 + seed)
            x = rng.standard_normal((200, 5))
            y = x @ beta0 + rng.standard_normal(200)
            prob = RegressionProblem(x, y)
            fit = fit_mm(prob, SFitConfig(SPEC, seed=seed), MMFitConfig(RHO1))
            clean_errs.append(np.linalg.norm(fit.beta - beta0))
        clean_median = np.median(clean_errs)

        rng = np.random.default_rng(250)
        x = rng.standard_normal((200, 5))
        y = x @ beta0 + rng.standard_normal(200)
        y[:40] = 1e6  # 20% vertical outliers
        prob = RegressionProblem(x, y)
        fit = fit_mm(prob, SFitConfig(SPEC, seed=9), MMFitConfig(RHO1))
        ls = fit_least_squares(prob)
        mm_err = np.linalg.norm(fit.beta - beta0)
        ls_err = np.linalg.norm(ls.beta - beta0)
        assert mm_err <= 5.0 * clean_median
        assert ls_err >= 1e3 * mm_err


class TestEquivariance:
    def test_all_three(self):
        prob, _ = make_problem(60, 3, 41)
        base = fit_mm(prob, SFitConfig(SPEC, seed=5), MMFitConfig(RHO1))
        rng = np.random.default_rng(42)

        lam = 3.7
        fit = fit_mm(
            RegressionProblem(prob.x, lam * prob.y), SFitConfig(SPEC, seed=5), MMFitConfig(RHO1)
        )
        assert np.linalg.norm(fit.beta - lam * base.beta) <= 1e-8 * max(
            1.0, lam * np.linalg.norm(base.beta)
        )
        assert fit.scale == pytest.approx(lam * base.scale, rel=1e-8)

        gamma = rng.standard_normal(3)
        fit = fit_mm(
            RegressionProblem(prob.x, prob.y + prob.x @ gamma),
            SFitConfig(SPEC, seed=5),
            MMFitConfig(RHO1),
        )
        assert np.linalg.norm(fit.beta - (base.beta + gamma)) <= 1e-8 * max(
            1.0, np.linalg.norm(base.beta + gamma)
        )

        a = np.eye(3) + 0.3 * rng.standard_normal((3, 3))
        fit = fit_mm(
            RegressionProblem(prob.x @ a, prob.y), SFitConfig(SPEC, seed=5), MMFitConfig(RHO1)
        )
        assert np.linalg.norm(a @ fit.beta - base.beta) <= 1e-6 * max(
            1.0, np.linalg.norm(base.beta)
        )
