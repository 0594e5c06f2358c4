"""
Weighted l1-penalized GLM estimation over a box.

The estimator minimizes

    sum_i gamma(X_i^T v, Y_i) + sum_j w_j |v_j|,   v in D0,

by proximal gradient with an adaptive backtracking step. The proximal map of
the l1 term plus the box indicator is separable: soft-thresholding followed by
clamping to the box. Nonconvex square-loss links are handled by multi-start.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple, Union

import numpy as np
from scipy.stats import qmc

from . import rng
from .design import DesignMatrix, ParamDomain, check_feasibility
from .enums import Stream
from .errors import DegenerateError, DomainError, InfeasibleError
from .losses import (LossFamily, check_response, curvature_constant, gamma_deriv,
                     loss_derivative_bounds)

logger = logging.getLogger(__name__)

TIE_TOL = 1e-12
# smallest trial step, as a fraction of step0
STEP_FLOOR = 2.0 ** -30
# relative objective slack accepted at or below step0
ROUNDOFF = 1e-13


@dataclass
class SolverOptions:
    """Tolerances and limits of :func:`fit`."""

    kkt_tol: float = 1e-8
    max_iter: int = 10_000
    restarts: int = 16
    sufficient_decrease: float = 1e-4
    seed: int = 0


@dataclass(frozen=True)
class LassoProblem:
    """
    A penalized estimation problem.

    ``penalty`` is either a scalar, the common coefficient of |v|_1, or a vector
    of per-coordinate weights lambda_j.
    """

    X: DesignMatrix
    y: np.ndarray
    family: LossFamily
    dom: ParamDomain
    penalty: Union[float, np.ndarray]

    def __post_init__(self):
        X = self.X if isinstance(self.X, DesignMatrix) else DesignMatrix(self.X)
        object.__setattr__(self, "X", X)
        y = np.array(self.y, dtype=float).ravel()
        if y.size != X.N:
            raise DomainError(f"design has {X.N} rows but {y.size} responses were given")
        check_response(self.family, y)
        y.setflags(write=False)
        object.__setattr__(self, "y", y)
        if self.dom.p != X.p:
            raise DomainError(f"design has {X.p} columns but the box has {self.dom.p}")
        weights = np.array(np.broadcast_to(np.asarray(self.penalty, dtype=float), (X.p,)))
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
            raise DomainError("penalty weights must be positive and finite")
        weights.setflags(write=False)
        object.__setattr__(self, "penalty", weights)
        if not check_feasibility(X, self.dom, self.family.interval):
            raise InfeasibleError("the box maps some rows outside the loss interval")

    def smooth(self, v: np.ndarray) -> float:
        return float(np.sum(gamma_deriv(self.family, self.X.values @ v, self.y, 0)))

    def gradient(self, v: np.ndarray) -> np.ndarray:
        return self.X.values.T @ gamma_deriv(self.family, self.X.values @ v, self.y, 1)

    def penalty_value(self, v: np.ndarray) -> float:
        return float(np.sum(self.penalty * np.abs(v)))

    def objective(self, v) -> float:
        v = np.asarray(v, dtype=float)
        return self.smooth(v) + self.penalty_value(v)


@dataclass
class LassoFit:
    theta_hat: np.ndarray
    objective: float
    kkt_residual: float
    restarts_used: int
    converged: bool
    iterations: int = 0
    step0: float = 0.0
    penalty: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def to_dict(self) -> Dict:
        return {
            "theta_hat": [float(v) for v in self.theta_hat],
            "objective": self.objective,
            "kkt_residual": self.kkt_residual,
            "restarts_used": self.restarts_used,
            "converged": self.converged,
            "iterations": self.iterations,
            "step0": self.step0,
            "penalty": [float(v) for v in self.penalty],
        }


def soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def prox_box_l1(z: np.ndarray, step: float, weights: np.ndarray, dom: ParamDomain) -> np.ndarray:
    """argmin over the box of |x - z|^2 / (2 step) + sum_j w_j |x_j|"""
    return dom.clip(soft_threshold(z, step * weights))


def spectral_norm_sq(values: np.ndarray, max_iter: int = 1000, tol: float = 1e-12) -> float:
    """Largest eigenvalue of X^T X by power iteration."""
    v = np.random.default_rng(0).standard_normal(values.shape[1])
    v /= np.linalg.norm(v)
    estimate = 0.0
    for _ in range(max_iter):
        w = values.T @ (values @ v)
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0
        v = w / norm
        if abs(norm - estimate) <= tol * norm:
            return norm
        estimate = norm
    return estimate


def initial_step(problem: LassoProblem) -> float:
    lipschitz = spectral_norm_sq(problem.X.values) * loss_derivative_bounds(problem.family, 1).F_mplus1
    return 1.0 / lipschitz if lipschitz > 0 else 1.0


def kkt_residual(problem: LassoProblem, v: np.ndarray, step: float,
                 grad: Optional[np.ndarray] = None) -> float:
    """Norm of v minus its proximal-gradient step of size ``step``."""
    if grad is None:
        grad = problem.gradient(v)
    return float(np.linalg.norm(v - prox_box_l1(v - step * grad, step, problem.penalty, problem.dom)))


def _descend(problem: LassoProblem, x0: np.ndarray, step0: float,
             opts: SolverOptions) -> Tuple[np.ndarray, float, float, bool, int]:
    x = problem.dom.clip(np.asarray(x0, dtype=float))
    smooth = problem.smooth(x)
    total = smooth + problem.penalty_value(x)
    grad = problem.gradient(x)
    step = step0
    residual = kkt_residual(problem, x, step0, grad)
    iterations = 0
    while residual > opts.kkt_tol and iterations < opts.max_iter:
        iterations += 1
        step *= 2.0
        stalled = False
        while True:
            x_new = prox_box_l1(x - step * grad, step, problem.penalty, problem.dom)
            delta = x_new - x
            smooth_new = problem.smooth(x_new)
            total_new = smooth_new + problem.penalty_value(x_new)
            decrease = opts.sufficient_decrease / step * float(delta @ delta)
            if math.isfinite(total_new) and total_new <= total - decrease:
                break
            if (step <= step0 and math.isfinite(total_new)
                    and total_new <= total + ROUNDOFF * max(1.0, abs(total))):
                break
            if step < step0 * STEP_FLOOR:
                if not math.isfinite(total_new):
                    raise DegenerateError(f"non-finite objective at iteration {iterations}")
                stalled = True
                break
            step /= 2.0
        if stalled:
            logger.debug("line search stalled at iteration %d (step %.3g)", iterations, step)
            break
        x, smooth, total = x_new, smooth_new, total_new
        grad = problem.gradient(x)
        residual = kkt_residual(problem, x, step0, grad)
    return x, total, residual, residual <= opts.kkt_tol, iterations


def _better(candidate: Tuple[float, np.ndarray], incumbent: Tuple[float, np.ndarray]) -> bool:
    obj, x = candidate
    best_obj, best_x = incumbent
    if obj < best_obj - TIE_TOL:
        return True
    if obj > best_obj + TIE_TOL:
        return False
    l1, best_l1 = float(np.sum(np.abs(x))), float(np.sum(np.abs(best_x)))
    if l1 != best_l1:
        return l1 < best_l1
    return tuple(x) < tuple(best_x)


def start_points(problem: LassoProblem, opts: SolverOptions) -> np.ndarray:
    """Zero projected into the box, or scrambled Sobol points for nonconvex losses."""
    dom = problem.dom
    if problem.family.is_convex or opts.restarts <= 1:
        return dom.clip(np.zeros(dom.p))[None, :]
    sampler = qmc.Sobol(d=dom.p, scramble=True, seed=rng.stream(opts.seed, 0, Stream.SOLVER))
    unit = sampler.random(opts.restarts)
    return dom.lower + unit * dom.widths


def fit(problem: LassoProblem, opts: Optional[SolverOptions] = None) -> LassoFit:
    """
    Minimize the penalized objective over the box.

    Convex families run a single descent from the projected origin; nonconvex
    links run ``opts.restarts`` descents and keep the best objective, breaking
    ties by smaller l1 norm and then lexicographically.

    Raises:
        DegenerateError: a non-finite objective is met.
    """
    opts = opts or SolverOptions()
    step0 = initial_step(problem)
    best = None
    starts = start_points(problem, opts)
    for k, x0 in enumerate(starts):
        x, total, residual, converged, iterations = _descend(problem, x0, step0, opts)
        logger.debug("start %d: objective %.12g, residual %.3g after %d iterations",
                     k, total, residual, iterations)
        if best is None or _better((total, x), (best[1], best[0])):
            best = (x, total, residual, converged, iterations)
    x, total, residual, converged, iterations = best
    if not converged:
        logger.warning("fit stopped after %d iterations with residual %.3g", iterations, residual)
    return LassoFit(
        theta_hat=x,
        objective=total,
        kkt_residual=residual,
        restarts_used=len(starts),
        converged=converged,
        iterations=iterations,
        step0=step0,
        penalty=problem.penalty,
    )


def lambda_from_theory(K: float, M_q: float, d: float) -> float:
    """lambda = (K + 1) M_q d / (K - 1)"""
    if not K > 1:
        raise DomainError(f"K must exceed 1, got {K}")
    if M_q < 0 or not d > 0:
        raise DomainError("lambda_from_theory needs M_q >= 0 and d > 0")
    return (K + 1.0) * M_q * d / (K - 1.0)


def error_bound_rhs(M_q: float, s0: int, N: int, K: float, d: float, C_gamma: float,
                    kappa: float) -> float:
    """
    l2 error bound M_q sqrt(s0) / N * 2 sqrt(2 + K^2) K d / (C_gamma kappa^2 (K - 1)).
    """
    if not K > 1:
        raise DomainError(f"K must exceed 1, got {K}")
    if not kappa > 0:
        raise DomainError(f"restricted eigenvalue must be positive, got {kappa}")
    if not C_gamma > 0:
        raise DomainError(f"curvature constant must be positive, got {C_gamma}")
    if s0 < 0:
        raise DomainError(f"sparsity must be non-negative, got {s0}")
    return (M_q * math.sqrt(s0) / N) * (
        2.0 * math.sqrt(2.0 + K * K) * K * d / (C_gamma * kappa ** 2 * (K - 1.0)))


def c_gamma_from_family(family: LossFamily) -> float:
    return curvature_constant(family)
