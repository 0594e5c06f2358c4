#!/usr/bin/env python
"""
Penalized estimator tests

Usage:
    pytest tests/test_solver.py -v
"""

import logging
import math

import numpy as np
import pytest

from lslasso import rng
from lslasso.design import ParamDomain
from lslasso.enums import LinkFn, Stream
from lslasso.errors import DomainError, InfeasibleError
from lslasso.losses import LossFamily
from lslasso.solver import (LassoProblem, SolverOptions, c_gamma_from_family, error_bound_rhs,
                            fit, kkt_residual, lambda_from_theory, prox_box_l1, soft_threshold)

logger = logging.getLogger(__name__)


def _logistic_problem(seed, N=20, p=2, penalty=0.3):
    gen = rng.stream(seed, 0, Stream.DESIGN)
    X = gen.choice([-1.0, 1.0], size=(N, p))
    theta = np.linspace(0.6, -0.6, p)
    y = (gen.random(N) < 1.0 / (1.0 + np.exp(-X @ theta))).astype(float)
    family = LossFamily.logistic((-(p + 1.0), p + 1.0))
    return LassoProblem(X, y, family, ParamDomain.box(p, -1.0, 1.0), penalty)


class TestProximalOperators:
    """Soft thresholding and the box-constrained prox"""

    @pytest.mark.solver
    def test_soft_threshold(self):
        assert soft_threshold(np.array([2.0, -0.3, -3.0]), 0.5).tolist() == [1.5, 0.0, -2.5]

    @pytest.mark.solver
    def test_prox_clips_to_box(self):
        dom = ParamDomain.box(2, -1.0, 1.0)
        out = prox_box_l1(np.array([5.0, -0.1]), 1.0, np.array([0.5, 0.5]), dom)
        assert out.tolist() == [1.0, 0.0]


class TestFit:
    """Known solutions and optimality of the fitted estimator"""

    @pytest.fixture(autouse=True)
    def _setup(self, seed, square_identity):
        self.seed = seed
        self.square = square_identity

    @pytest.mark.solver
    def test_zero_response(self):
        problem = LassoProblem(np.eye(2), np.zeros(2), self.square, ParamDomain.box(2, -1.0, 1.0),
                               1.0)
        result = fit(problem)
        assert result.converged
        assert result.theta_hat.tolist() == [0.0, 0.0]

    @pytest.mark.solver
    def test_one_dimensional_soft_threshold(self):
        family = LossFamily.gaussian_square(LinkFn.IDENTITY, 1.0, (-11.0, 11.0))
        problem = LassoProblem(np.ones((1, 1)), [2.0], family, ParamDomain.box(1, -10.0, 10.0), 0.5)
        result = fit(problem)
        assert abs(result.theta_hat[0] - 1.5) <= 1e-10
        assert result.kkt_residual <= 1e-8

    @pytest.mark.solver
    def test_objective_never_increases(self):
        # responses far outside the +-3 sigma0 test set, so step0 exceeds 1/L
        family = LossFamily.gaussian_square(LinkFn.SIGMOID, 1.0, (-5.0, 5.0))
        problem = LassoProblem(np.ones((1, 1)), [40.0], family, ParamDomain.box(1, -5.0, 5.0),
                               1.0)
        start = problem.objective(np.zeros(1))
        objectives = [fit(problem, SolverOptions(restarts=1, max_iter=k)).objective
                      for k in range(1, 41)]
        for before, after in zip([start] + objectives, objectives):
            assert after <= before + 1e-12 * max(1.0, abs(before))
        result = fit(problem, SolverOptions(restarts=1))
        assert result.converged
        assert 3.0 < result.theta_hat[0] < 4.5

    @pytest.mark.solver
    def test_matches_grid_search(self):
        problem = _logistic_problem(self.seed)
        result = fit(problem)
        assert result.converged
        axis = np.linspace(-1.0, 1.0, 401)
        a, b = np.meshgrid(axis, axis, indexing="ij")
        V = np.column_stack([a.ravel(), b.ravel()])
        t = V @ problem.X.values.T
        grid = (np.sum(np.logaddexp(0.0, t) - problem.y[None, :] * t, axis=1)
                + 0.3 * np.sum(np.abs(V), axis=1))
        assert result.objective <= grid.min() + 1e-9
        assert grid.min() - result.objective <= 1e-3

    @pytest.mark.solver
    def test_no_feasible_point_does_better(self):
        problem = _logistic_problem(self.seed, N=40, p=4, penalty=0.5)
        result = fit(problem)
        gen = np.random.default_rng(self.seed)
        for v in gen.uniform(-1.0, 1.0, size=(1000, 4)):
            assert problem.objective(v) >= result.objective - 1e-9

    @pytest.mark.solver
    def test_kkt_residual_reported(self):
        problem = _logistic_problem(self.seed, N=40, p=4, penalty=0.5)
        result = fit(problem)
        assert result.kkt_residual <= SolverOptions().kkt_tol
        assert kkt_residual(problem, result.theta_hat, result.step0) == pytest.approx(
            result.kkt_residual, abs=1e-15)

    @pytest.mark.solver
    def test_l1_norm_decreases_with_penalty(self):
        norms = []
        for penalty in (0.1, 0.5, 1.0, 2.0, 4.0):
            result = fit(_logistic_problem(self.seed, N=40, p=4, penalty=penalty))
            norms.append(float(np.sum(np.abs(result.theta_hat))))
        assert all(a >= b - 1e-6 for a, b in zip(norms, norms[1:]))

    @pytest.mark.solver
    def test_large_penalty_gives_zero(self):
        result = fit(_logistic_problem(self.seed, N=40, p=4, penalty=100.0))
        assert np.all(result.theta_hat == 0.0)
        assert result.iterations == 0

    @pytest.mark.solver
    def test_nonconvex_restarts_deterministic(self):
        family = LossFamily.gaussian_square(LinkFn.SIGMOID, 1.0, (-5.0, 5.0))
        gen = rng.stream(self.seed, 0, Stream.DESIGN)
        X = gen.choice([-1.0, 1.0], size=(30, 3))
        y = 1.0 / (1.0 + np.exp(-X @ np.array([1.0, -0.5, 0.0]))) + 0.1 * gen.standard_normal(30)
        problem = LassoProblem(X, y, family, ParamDomain.box(3, -1.0, 1.0), 0.2)
        first = fit(problem, SolverOptions(seed=self.seed))
        second = fit(problem, SolverOptions(seed=self.seed))
        assert first.restarts_used == 16
        assert np.array_equal(first.theta_hat, second.theta_hat)
        assert first.objective == second.objective

    @pytest.mark.solver
    def test_infeasible_box(self):
        with pytest.raises(InfeasibleError):
            LassoProblem(np.eye(2), np.zeros(2), LossFamily.logistic((-1.0, 1.0)),
                         ParamDomain.box(2, -2.0, 2.0), 1.0)

    @pytest.mark.solver
    def test_invalid_inputs(self):
        dom = ParamDomain.box(2, -1.0, 1.0)
        with pytest.raises(DomainError):
            LassoProblem(np.eye(2), np.zeros(2), self.square, dom, 0.0)
        with pytest.raises(DomainError):
            LassoProblem(np.eye(2), np.zeros(3), self.square, dom, 1.0)
        with pytest.raises(DomainError):
            LassoProblem(np.eye(2), [0.0, 0.5], LossFamily.logistic((-3.0, 3.0)), dom, 1.0)


class TestTheory:
    """Penalty level and error bound formulas"""

    @pytest.mark.solver
    def test_lambda_from_theory(self):
        assert lambda_from_theory(3.0, 1.0, 1.0) == pytest.approx(2.0)
        with pytest.raises(DomainError):
            lambda_from_theory(1.0, 1.0, 1.0)

    @pytest.mark.solver
    def test_error_bound(self):
        assert error_bound_rhs(1.0, 1, 100, 3.0, 1.0, 1.0, 1.0) == pytest.approx(
            3.0 * math.sqrt(11.0) / 100.0, rel=1e-12)
        assert error_bound_rhs(1.0, 0, 100, 3.0, 1.0, 1.0, 1.0) == 0.0
        with pytest.raises(DomainError):
            error_bound_rhs(1.0, 1, 100, 3.0, 1.0, 1.0, 0.0)

    @pytest.mark.solver
    def test_c_gamma(self, square_identity):
        assert c_gamma_from_family(square_identity) == pytest.approx(0.475, rel=1e-12)
