"""
Monte-Carlo verification harness.

Draws synthetic data sets from well-specified GLMs and checks, trial by trial,
the tail bounds of the bounds module, the xi_1 bounds, the maximal inequality
for Gaussian linear forms, and the l2 error bound of the penalized estimator.

Every trial draws from its own counter-based streams keyed by (seed, trial), so
reports do not depend on the number of worker threads.
"""

import dataclasses
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from . import rng
from .bounds import (bounded_constants, coefficient_bound_m1, coefficient_bound_m1_gaussian,
                     gaussian_constants, gaussian_weights, mle_constants, penalty_level_terms,
                     xi1_threshold_bounded, xi1_threshold_gaussian)
from .design import (MAX_VERTEX_DIM, DesignMatrix, ParamDomain, check_feasibility,
                     column_scales, weighted_l1_diameter)
from .enums import DesignKind, LinkFn, LossKind, Regime, Stream
from .errors import DegenerateError, DomainError, InfeasibleError, UnsupportedError
from .losses import (LossFamily, derivative_bounds, expected_loss, expected_loss_deriv,
                     gamma_deriv, link_deriv, loss_derivative_bounds)
from .restricted_eigenvalue import ReOptions, re_condition_holds
from .solver import (LassoProblem, SolverOptions, c_gamma_from_family, error_bound_rhs, fit,
                     lambda_from_theory)

logger = logging.getLogger(__name__)

TRIAL_COLUMNS = ["trial", "statistic", "threshold", "violated"]
SLACK_SIGMAS = 3.0
MASSART_BATCH = 10_000


@dataclass(frozen=True)
class SearchBudget:
    """Size of the search set used to estimate a supremum over the box."""

    random: int = 4096
    local: int = 200
    random_vertices: int = 4096

    def to_dict(self) -> Dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class SimSpec:
    """
    A simulation setting: design, true parameter, loss family, noise and run size.

    The design is drawn once per seed (trial 0 of the design stream) and held
    fixed across trials; responses are redrawn every trial.
    """

    N: int
    p: int
    s0: int
    theta_star: np.ndarray
    family: LossFamily
    domain: ParamDomain
    design: DesignKind = DesignKind.RADEMACHER
    regime: Regime = Regime.BOUNDED
    variances: Optional[np.ndarray] = None
    seed: int = 0
    trials: int = 100
    design_scale: float = 1.0
    design_path: Optional[str] = None
    design_header: bool = False
    budget: SearchBudget = field(default_factory=SearchBudget)

    def __post_init__(self):
        object.__setattr__(self, "design", DesignKind(self.design))
        object.__setattr__(self, "regime", Regime(self.regime))
        theta = np.array(self.theta_star, dtype=float).ravel()
        theta.setflags(write=False)
        object.__setattr__(self, "theta_star", theta)
        if self.N < 1 or self.p < 1 or self.trials < 1:
            raise DomainError("N, p and trials must be positive")
        if theta.size != self.p or self.domain.p != self.p:
            raise DomainError(f"theta_star and the box must have p = {self.p} coordinates")
        if not 0 <= self.s0 <= self.p:
            raise DomainError(f"s0 must lie in 0..p, got {self.s0}")
        if int(np.count_nonzero(theta)) != self.s0:
            raise DomainError(f"theta_star has {np.count_nonzero(theta)} non-zeros, expected s0 = {self.s0}")
        if not self.domain.contains(theta):
            raise InfeasibleError("theta_star lies outside the box")
        if self.variances is not None:
            variances = np.array(np.broadcast_to(np.asarray(self.variances, dtype=float), (self.N,)))
            if np.any(variances < 0):
                raise DomainError("noise variances must be non-negative")
            variances.setflags(write=False)
            object.__setattr__(self, "variances", variances)
        if self.design == DesignKind.FROM_FILE and not self.design_path:
            raise DomainError("design 'from_file' needs design_path")

    def replace(self, **changes) -> "SimSpec":
        return dataclasses.replace(self, **changes)

    @property
    def sigma0(self) -> float:
        return self.family.sigma0

    def noise_variances(self) -> np.ndarray:
        if self.variances is not None:
            return self.variances
        return np.full(self.N, self.family.sigma0 ** 2)

    @cached_property
    def design_matrix(self) -> DesignMatrix:
        """
        The fixed design of this spec.

        Raises:
            InfeasibleError: the box maps some row outside the loss interval.
        """
        if self.design == DesignKind.FROM_FILE:
            X = DesignMatrix.from_csv(self.design_path, header=self.design_header)
            if (X.N, X.p) != (self.N, self.p):
                raise DomainError(f"{self.design_path}: expected a {self.N} x {self.p} design, "
                                  f"found {X.N} x {X.p}")
        else:
            X = DesignMatrix(_draw_designs(self, rng.stream(self.seed, 0, Stream.DESIGN), 1)[0])
        if not check_feasibility(X, self.domain, self.family.interval):
            raise InfeasibleError("design and box leave the working interval of the loss")
        return X

    def to_dict(self) -> Dict:
        return {
            "N": self.N,
            "p": self.p,
            "s0": self.s0,
            "theta_star": [float(v) for v in self.theta_star],
            "family": self.family.to_dict(),
            "domain": self.domain.to_dict(),
            "design": self.design.value,
            "regime": self.regime.value,
            "seed": self.seed,
            "trials": self.trials,
            "design_scale": self.design_scale,
            "budget": self.budget.to_dict(),
        }


def _draw_designs(spec: SimSpec, gen: np.random.Generator, draws: int) -> np.ndarray:
    shape = (draws, spec.N, spec.p)
    if spec.design == DesignKind.RADEMACHER:
        return spec.design_scale * (2.0 * gen.integers(0, 2, size=shape) - 1.0)
    if spec.design == DesignKind.UNIFORM_BOX:
        return gen.uniform(-spec.design_scale, spec.design_scale, size=shape)
    raise UnsupportedError("designs read from file cannot be redrawn")


def sample_design_stack(spec: SimSpec, draws: int = 10_000) -> np.ndarray:
    """Independent design draws (draws x N x p) for random-design constants."""
    return _draw_designs(spec, rng.stream(spec.seed, 1, Stream.DESIGN), draws)


def _sparse_theta(p: int, s0: int, magnitude: float) -> np.ndarray:
    theta = np.zeros(p)
    theta[:s0] = magnitude * np.where(np.arange(s0) % 2 == 0, 1.0, -1.0)
    return theta


def logistic_spec(N: int = 100, p: int = 8, s0: int = 2, trials: int = 2000,
                  seed: int = 20240611, magnitude: float = 0.4) -> SimSpec:
    """Logistic model on a Rademacher design over the box [-0.5, 0.5]^p."""
    half = 0.5
    return SimSpec(
        N=N, p=p, s0=s0,
        theta_star=_sparse_theta(p, s0, magnitude),
        family=LossFamily.logistic((-(half * p + 0.5), half * p + 0.5)),
        domain=ParamDomain.box(p, -half, half),
        seed=seed, trials=trials,
    )


def gaussian_spec(N: int = 100, p: int = 8, s0: int = 2, trials: int = 2000,
                  seed: int = 20240611, link: LinkFn = LinkFn.SIGMOID, sigma0: float = 1.0,
                  magnitude: float = 0.4, variances=None) -> SimSpec:
    """Square loss with Gaussian noise, mean f(X theta*), Rademacher design."""
    half = 0.5
    return SimSpec(
        N=N, p=p, s0=s0,
        theta_star=_sparse_theta(p, s0, magnitude),
        family=LossFamily.gaussian_square(link, sigma0, (-(half * p + 0.5), half * p + 0.5)),
        domain=ParamDomain.box(p, -half, half),
        regime=Regime.GAUSSIAN, variances=variances,
        seed=seed, trials=trials,
    )


@dataclass(frozen=True)
class Dataset:
    X: DesignMatrix
    y: np.ndarray
    t_star: np.ndarray
    variances: np.ndarray
    seed: int
    trial: int

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.X.values, columns=[f"x{j + 1}" for j in range(self.X.p)])
        frame.insert(0, "y", self.y)
        return frame


def simulate(spec: SimSpec, trial: int) -> Dataset:
    """Draw the responses of one trial at the true index X theta*."""
    X = spec.design_matrix
    t_star = X.values @ spec.theta_star
    gen = rng.stream(spec.seed, trial, Stream.NOISE)
    variances = spec.noise_variances()
    family = spec.family
    if family.kind == LossKind.LOGISTIC:
        y = (gen.random(spec.N) < link_deriv(LinkFn.SIGMOID, t_star, 0)).astype(float)
    elif family.kind == LossKind.POISSON_LOG:
        y = gen.poisson(np.exp(t_star)).astype(float)
    else:
        y = link_deriv(family.link, t_star, 0) + np.sqrt(variances) * gen.standard_normal(spec.N)
    return Dataset(X, y, t_star, variances, spec.seed, trial)


@dataclass
class EmpiricalProcessSample:
    sup_ratio: float
    sup_xi: float
    xi1_value: float
    argmax_v: np.ndarray
    points_evaluated: int = 0

    def to_dict(self) -> Dict:
        return {
            "sup_ratio": self.sup_ratio,
            "sup_xi": self.sup_xi,
            "xi1_value": self.xi1_value,
            "argmax_v": [float(v) for v in self.argmax_v],
            "points_evaluated": self.points_evaluated,
        }


class _ProcessSearch:
    """Evaluates the weighted ratio at batches of points and keeps the running suprema."""

    def __init__(self, dataset: Dataset, theta: np.ndarray, family: LossFamily,
                 weights: np.ndarray, scales: np.ndarray):
        self.dataset = dataset
        self.family = family
        self.theta = theta
        self.weights = weights
        self.scales = scales
        t_theta = dataset.X.values @ theta
        self.base = self.process(theta[None, :])[0]
        centered_deriv = (gamma_deriv(family, t_theta, dataset.y, 1)
                          - expected_loss_deriv(family, t_theta, dataset.t_star))
        self.linear = dataset.X.values.T @ centered_deriv
        self.xi1 = float(np.max(np.abs(self.linear) / scales))
        self.best_ratio = 0.0
        self.best_v = theta.copy()
        self.sup_xi = 0.0
        self.count = 0

    def process(self, V: np.ndarray) -> np.ndarray:
        """Centered empirical loss sum_i <gamma(X_i^T v, Y_i)> at each row of V."""
        ds = self.dataset
        T = ds.X.values @ V.T
        loss = gamma_deriv(self.family, T, ds.y[:, None], 0)
        mean = expected_loss(self.family, T, ds.t_star[:, None], ds.variances[:, None])
        return np.sum(loss - mean, axis=0)

    def evaluate(self, V: np.ndarray) -> np.ndarray:
        diff = self.process(V) - self.base
        step = V - self.theta
        den = np.abs(step) @ self.weights
        den_d = np.abs(step) @ self.scales
        moved = den > 0
        ratios = np.where(moved, np.abs(diff) / np.where(moved, den, 1.0), 0.0)
        xi = np.where(moved, (diff - step @ self.linear) / np.where(moved, den_d, 1.0), 0.0)
        self.count += V.shape[0]
        k = int(np.argmax(ratios))
        if ratios[k] > self.best_ratio:
            self.best_ratio = float(ratios[k])
            self.best_v = V[k].copy()
        self.sup_xi = max(self.sup_xi, float(np.max(np.abs(xi))))
        return ratios


def _vertex_set(dom: ParamDomain, budget: SearchBudget, gen: np.random.Generator) -> np.ndarray:
    if dom.p <= MAX_VERTEX_DIM:
        return dom.vertex_array()
    bits = gen.integers(0, 2, size=(budget.random_vertices, dom.p)).astype(bool)
    return np.where(bits, dom.upper, dom.lower)


def _hill_climb(search: _ProcessSearch, start: np.ndarray, dom: ParamDomain, steps: int) -> None:
    """Coordinate-wise pattern search trying {l_j, u_j, theta_j, v_j +- delta_j}."""
    v = start.copy()
    best = search.evaluate(v[None, :])[0]
    delta = dom.widths / 4.0
    stale = 0
    j = 0
    for _ in range(steps):
        trial = np.repeat(v[None, :], 5, axis=0)
        moves = [dom.lower[j], dom.upper[j], search.theta[j], v[j] + delta[j], v[j] - delta[j]]
        trial[:, j] = np.clip(moves, dom.lower[j], dom.upper[j])
        ratios = search.evaluate(trial)
        k = int(np.argmax(ratios))
        if ratios[k] > best:
            v, best, stale = trial[k], ratios[k], 0
        else:
            stale += 1
        if stale >= dom.p:
            delta = delta / 2.0
            stale = 0
        j = (j + 1) % dom.p


def empirical_lsl_ratio(dataset: Dataset, theta, family: LossFamily, dom: ParamDomain, weights,
                        budget: Optional[SearchBudget] = None,
                        scales=None) -> EmpiricalProcessSample:
    """
    Lower estimate of sup_v |R~(v) - R~(theta)| / sum_j w_j |v_j - theta_j|.

    R~ is the empirical loss centered by its analytic conditional mean at the
    true index. The search set is the box vertices (or random vertices when
    p > 12), ``budget.random`` uniform points drawn in sequence, and
    ``budget.local`` pattern-search moves from the best vertex; a larger budget
    searches a superset of a smaller one.

    Also reports the remainder supremum sup |xi(v)| and xi_1 = max_j |g_j| / d_j
    of the first-order decomposition in d-weighted distance.
    """
    budget = budget or SearchBudget()
    theta = np.asarray(theta, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if np.any(weights <= 0):
        raise DomainError("search weights must be positive")
    if not dom.contains(theta):
        raise InfeasibleError("theta lies outside the box")
    if family.kind == LossKind.GAUSSIAN_SQUARE and dataset.variances is None:
        raise UnsupportedError("centering needs the noise variances of the generating model")
    scales = column_scales(dataset.X) if scales is None else np.asarray(scales, dtype=float)
    search = _ProcessSearch(dataset, theta, family, weights, scales)
    gen = rng.stream(dataset.seed, dataset.trial, Stream.SEARCH)

    vertices = _vertex_set(dom, budget, gen)
    vertex_ratios = search.evaluate(vertices)
    uniform = dom.lower + gen.random((budget.random, dom.p)) * dom.widths
    for start in range(0, budget.random, 1024):
        search.evaluate(uniform[start:start + 1024])
    if budget.local > 0:
        _hill_climb(search, vertices[int(np.argmax(vertex_ratios))], dom, budget.local)
    return EmpiricalProcessSample(
        sup_ratio=search.best_ratio,
        sup_xi=search.sup_xi,
        xi1_value=search.xi1,
        argmax_v=search.best_v,
        points_evaluated=search.count,
    )


@dataclass
class McReport:
    """
    Outcome of a Monte-Carlo check of a one-sided "fails with probability <= q"
    statement. Passes when the violation rate is within 3 binomial standard
    errors of the nominal level.
    """

    name: str
    trials: int
    violations: int
    violation_rate: float
    nominal_q: float
    binomial_slack: float
    passed: bool
    rows: pd.DataFrame = field(repr=False, default_factory=lambda: pd.DataFrame(columns=TRIAL_COLUMNS))
    details: Dict = field(default_factory=dict)
    csv_path: Optional[str] = None

    @classmethod
    def from_rows(cls, name: str, rows: pd.DataFrame, nominal_q: float,
                  details: Optional[Dict] = None) -> "McReport":
        trials = len(rows)
        violations = int(rows["violated"].sum())
        rate = violations / trials
        slack = SLACK_SIGMAS * math.sqrt(nominal_q * (1.0 - nominal_q) / trials)
        return cls(name, trials, violations, rate, nominal_q, slack,
                   rate <= nominal_q + slack, rows, dict(details or {}))

    def to_dict(self) -> Dict:
        return {
            "name": self.name,
            "trials": self.trials,
            "violations": self.violations,
            "violation_rate": self.violation_rate,
            "nominal_q": self.nominal_q,
            "binomial_slack": self.binomial_slack,
            "pass": self.passed,
            "csv_path": self.csv_path,
            "details": self.details,
        }


def _map_trials(fn: Callable[[int], Dict], trials: int, threads: int = 1) -> List[Dict]:
    if threads <= 1:
        return [fn(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(trials)))


def _trial_frame(records: Sequence[Dict]) -> pd.DataFrame:
    frame = pd.DataFrame.from_records(records)
    frame["violated"] = (frame["statistic"] > frame["threshold"]).astype(int)
    extra = [c for c in frame.columns if c not in TRIAL_COLUMNS]
    return frame[TRIAL_COLUMNS + extra]


def _require_m1(m: int) -> None:
    if m != 1:
        raise UnsupportedError(f"the verification runs use first-order expansions, got m = {m}")


def verify_tail_bounded(spec: SimSpec, q: float, qprime: float, threads: int = 1,
                        threshold_scale: float = 1.0, m: int = 1) -> McReport:
    """
    Empirical check that the d-weighted LSL ratio exceeds M(q, q') with
    frequency at most q + q'. ``threshold_scale`` shrinks the level for
    detector sanity runs.
    """
    _require_m1(m)
    X = spec.design_matrix
    d = column_scales(X)
    R, _ = weighted_l1_diameter(spec.domain, d)
    bounds = loss_derivative_bounds(spec.family, 1)
    constants = bounded_constants(X, d, bounds.F_m, bounds.F_mplus1, R, 1)
    level = coefficient_bound_m1(constants, bounds.F_m, spec.N, spec.p, q, qprime)
    threshold = threshold_scale * level
    logger.info("verify-tail (bounded): %d trials, M(q, q') = %.6g, threshold %.6g",
                spec.trials, level, threshold)

    def run(trial: int) -> Dict:
        sample = empirical_lsl_ratio(simulate(spec, trial), spec.theta_star, spec.family,
                                     spec.domain, d, spec.budget, d)
        return {"trial": trial, "statistic": sample.sup_ratio, "threshold": threshold,
                "sup_xi": sample.sup_xi, "xi1": sample.xi1_value}

    rows = _trial_frame(_map_trials(run, spec.trials, threads))
    details = {
        "constants": constants.to_dict(),
        "F1": bounds.F_m,
        "F2": bounds.F_mplus1,
        "R": R,
        "level": level,
        "threshold_scale": threshold_scale,
        # first-order decomposition: ratio <= |xi_1| + sup |xi|
        "decomposition_holds": bool(np.all(
            rows["statistic"] <= rows["xi1"] + rows["sup_xi"] + 1e-9 * (1.0 + rows["statistic"]))),
        "spec": spec.to_dict(),
    }
    report = McReport.from_rows("verify-tail-bounded", rows, q + qprime, details)
    logger.info("verify-tail (bounded): %d/%d violations, pass=%s",
                report.violations, report.trials, report.passed)
    return report


def _gaussian_setup(spec: SimSpec):
    X = spec.design_matrix
    d = column_scales(X)
    R, _ = weighted_l1_diameter(spec.domain, d)
    bounds = derivative_bounds(spec.family, 1)
    constants = gaussian_constants(X, d, spec.sigma0, spec.noise_variances(),
                                   bounds.F_m, bounds.F_mplus1, R, 1)
    return X, d, R, bounds, constants


def verify_tail_gaussian(spec: SimSpec, q: float, qprime: float, threads: int = 1,
                         threshold_scale: float = 1.0, m: int = 1) -> McReport:
    """
    Empirical check of the Gaussian-noise level
    sigma0 [A sqrt(ln 2p) + B sqrt(2 ln(p/q)) + F1 sqrt(2 ln(p/q'))]
    for the lambda-weighted ratio of the noise process sum_i xi_i f(X_i^T v).
    """
    _require_m1(m)
    if spec.family.kind != LossKind.GAUSSIAN_SQUARE:
        raise UnsupportedError("the Gaussian-noise bound applies to the square loss")
    _, d, R, bounds, constants = _gaussian_setup(spec)
    level = coefficient_bound_m1_gaussian(constants, bounds.F_m, spec.p, q, qprime)
    threshold = threshold_scale * level
    logger.info("verify-tail (gaussian): %d trials, M(q, q') = %.6g", spec.trials, level)

    def run(trial: int) -> Dict:
        sample = empirical_lsl_ratio(simulate(spec, trial), spec.theta_star, spec.family,
                                     spec.domain, constants.lambda_weights, spec.budget, d)
        return {"trial": trial, "statistic": sample.sup_ratio, "threshold": threshold}

    rows = _trial_frame(_map_trials(run, spec.trials, threads))
    details = {
        "constants": constants.to_dict(),
        "F1": bounds.F_m,
        "F2": bounds.F_mplus1,
        "R": R,
        "level": level,
        "threshold_scale": threshold_scale,
        "spec": spec.to_dict(),
    }
    report = McReport.from_rows("verify-tail-gaussian", rows, q + qprime, details)
    logger.info("verify-tail (gaussian): %d/%d violations, pass=%s",
                report.violations, report.trials, report.passed)
    return report


def verify_xi1(spec: SimSpec, q: float, regime: Optional[Regime] = None,
               threads: int = 1) -> McReport:
    """
    Check the tail bound of the linear coefficient xi_1.

    Bounded: max_j |sum_i <gamma'(X_i^T theta, Y_i)> X_ij / d_j| against
    F1 sqrt(2N ln(2p/q)). Gaussian: max_j |W_j| with
    W_j = sum_i xi_i f'(X_i^T theta) X_ij / (sigma0 F1 w_j), against sqrt(2 ln(p/q)).
    """
    regime = Regime(regime or spec.regime)
    if regime != spec.regime:
        raise DomainError(f"regime {regime.value} does not match the spec ({spec.regime.value})")
    X = spec.design_matrix
    theta = spec.theta_star
    t_theta = X.values @ theta
    if regime == Regime.BOUNDED:
        d = column_scales(X)
        F1 = loss_derivative_bounds(spec.family, 1).F_m
        threshold = xi1_threshold_bounded(F1, spec.N, spec.p, q)

        def statistic(ds: Dataset) -> float:
            centered = (gamma_deriv(spec.family, t_theta, ds.y, 1)
                        - expected_loss_deriv(spec.family, t_theta, ds.t_star))
            return float(np.max(np.abs(X.values.T @ centered) / d))
        details = {"F1": F1}
    else:
        if spec.family.kind != LossKind.GAUSSIAN_SQUARE:
            raise UnsupportedError("the Gaussian xi_1 bound applies to the square loss")
        F1 = derivative_bounds(spec.family, 1).F_m
        w = gaussian_weights(X, spec.sigma0, spec.noise_variances())
        keep = w > 0
        if not np.all(keep):
            logger.warning("excluding %d column(s) with zero noise weight: %s",
                           int(np.sum(~keep)), np.flatnonzero(~keep).tolist())
        if not np.any(keep) or F1 == 0:
            raise DegenerateError("no column carries noise; W_j undefined")
        threshold = xi1_threshold_gaussian(spec.p, q)
        slope = link_deriv(spec.family.link, t_theta, 1)

        def statistic(ds: Dataset) -> float:
            noise = ds.y - link_deriv(spec.family.link, ds.t_star, 0)
            W = (X.values[:, keep].T @ (noise * slope)) / (spec.sigma0 * F1 * w[keep])
            return float(np.max(np.abs(W)))
        details = {"F1": F1, "w": [float(v) for v in w]}

    def run(trial: int) -> Dict:
        return {"trial": trial, "statistic": statistic(simulate(spec, trial)),
                "threshold": threshold}

    rows = _trial_frame(_map_trials(run, spec.trials, threads))
    details.update(threshold=threshold, regime=regime.value, spec=spec.to_dict())
    report = McReport.from_rows(f"verify-xi1-{regime.value}", rows, q, details)
    logger.info("verify-xi1 (%s): %d/%d violations, pass=%s",
                regime.value, report.violations, report.trials, report.passed)
    return report


@dataclass
class MassartReport:
    """MC mean of max_j |omega^T V_j| against 2 sqrt(ln 2p) max_j |V_j|_2."""

    p: int
    trials: int
    mc_mean: float
    standard_error: float
    bound: float
    passed: bool
    rows: pd.DataFrame = field(repr=False, default_factory=pd.DataFrame)
    name: str = "verify-massart"
    csv_path: Optional[str] = None

    def to_dict(self) -> Dict:
        return {
            "name": self.name,
            "p": self.p,
            "trials": self.trials,
            "mc_mean": self.mc_mean,
            "standard_error": self.standard_error,
            "bound": self.bound,
            "pass": self.passed,
            "csv_path": self.csv_path,
        }


def verify_massart(p: int, columns, trials: int, seed: int = 0) -> MassartReport:
    """
    Monte-Carlo check of E max_j |omega^T V_j| <= 2 sqrt(ln 2p) max_j |V_j|_2
    for standard normal omega; passes with 3 standard errors of slack.
    """
    V = np.asarray(columns, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    if V.shape[1] != p:
        raise DomainError(f"expected {p} columns, got {V.shape[1]}")
    gen = rng.stream(seed, 0, Stream.MASSART)
    stats = np.empty(trials)
    for start in range(0, trials, MASSART_BATCH):
        count = min(MASSART_BATCH, trials - start)
        omega = gen.standard_normal((count, V.shape[0]))
        stats[start:start + count] = np.max(np.abs(omega @ V), axis=1)
    mean = float(np.mean(stats))
    se = float(np.std(stats, ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    bound = 2.0 * math.sqrt(math.log(2.0 * p)) * float(np.max(np.linalg.norm(V, axis=0)))
    rows = pd.DataFrame({"trial": np.arange(trials), "statistic": stats, "threshold": bound})
    rows["violated"] = (rows["statistic"] > rows["threshold"]).astype(int)
    report = MassartReport(p, trials, mean, se, bound, mean <= bound + 3.0 * se, rows)
    logger.info("verify-massart: p=%d mean %.6g (se %.3g) bound %.6g pass=%s",
                p, mean, se, bound, report.passed)
    return report


def theoretical_penalty(spec: SimSpec, q1: float, q2: float, K: float) -> Dict:
    """
    Lambda of the estimator from the m = 1 level M_q = M1 + M2 and d = max_j d_j.

    M1 uses the simplified likelihood constants of :func:`mle_constants`;
    ``M1_general`` is the same term from :func:`bounded_constants`, reported
    for comparison only.
    """
    X = spec.design_matrix
    d_vec = column_scales(X)
    d = float(np.max(d_vec))
    R, delta = weighted_l1_diameter(spec.domain, d_vec)
    bounds = loss_derivative_bounds(spec.family, 1)
    constants = mle_constants(X, d, bounds.F_m, bounds.F_mplus1, delta)
    M1, M2 = penalty_level_terms(constants, bounds.F_m, spec.N, spec.p, q1, q2)
    general = bounded_constants(X, d_vec, bounds.F_m, bounds.F_mplus1, R, 1)
    M1_general, _ = penalty_level_terms(general, bounds.F_m, spec.N, spec.p, q1, q2)
    return {"d": d, "R": R, "Delta": delta, "M1": M1, "M2": M2, "M_q": M1 + M2,
            "M1_general": M1_general, "constants": constants.to_dict(),
            "lambda": lambda_from_theory(K, M1 + M2, d)}


def _l2_errors(spec: SimSpec, penalty: float,
               solver: Optional[SolverOptions] = None) -> Callable[[int], Dict]:
    X = spec.design_matrix

    def run(trial: int) -> Dict:
        ds = simulate(spec, trial)
        result = fit(LassoProblem(X, ds.y, spec.family, spec.domain, penalty), solver)
        error = float(np.linalg.norm(result.theta_hat - spec.theta_star))
        return {"trial": trial, "error": error, "converged": result.converged,
                "nonzero": int(np.count_nonzero(result.theta_hat))}
    return run


def verify_l2_bound(spec: SimSpec, q1: float, q2: float, K: float, threads: int = 1,
                    re_opts: Optional[ReOptions] = None,
                    solver: Optional[SolverOptions] = None,
                    penalty: Optional[float] = None) -> McReport:
    """
    Fit with the theoretical penalty and compare |theta_hat - theta*|_2 to the
    l2 error bound; violations must stay below q1 + q2 up to slack.

    An explicit ``penalty`` replaces the theoretical one; the bound then uses
    the level it implies, M_q = penalty (K - 1) / ((K + 1) d).

    Raises:
        UnsupportedError: nonconvex family.
        DegenerateError: the restricted eigenvalue kappa(2 s0, K) is not positive.
        DomainError: non-positive explicit penalty.
    """
    if not spec.family.is_convex:
        raise UnsupportedError("the l2 error bound needs a convex likelihood family")
    if penalty is not None and not penalty > 0:
        raise DomainError(f"penalty must be positive, got {penalty}")
    X = spec.design_matrix
    holds, kappa = re_condition_holds(X, max(spec.s0, 1), K, re_opts)
    if not holds:
        raise DegenerateError(f"restricted eigenvalue kappa(2 s0, K) = {kappa:.3g} is not positive")
    c_gamma = c_gamma_from_family(spec.family)
    setup = theoretical_penalty(spec, q1, q2, K)
    if penalty is None:
        level, source = setup["M_q"], "theory"
    else:
        level = penalty * (K - 1.0) / ((K + 1.0) * setup["d"])
        setup = dict(setup, M_q_implied=level, **{"lambda": float(penalty)})
        source = "config"
    rhs = error_bound_rhs(level, spec.s0, spec.N, K, setup["d"], c_gamma, kappa)
    logger.info("verify-error: kappa %.6g, C_gamma %.6g, lambda %.6g (%s), bound %.6g",
                kappa, c_gamma, setup["lambda"], source, rhs)

    run = _l2_errors(spec, setup["lambda"], solver)

    def row(trial: int) -> Dict:
        out = run(trial)
        return {"trial": trial, "statistic": out["error"], "threshold": rhs,
                "converged": out["converged"], "nonzero": out["nonzero"]}

    rows = _trial_frame(_map_trials(row, spec.trials, threads))
    details = dict(setup, kappa=kappa, C_gamma=c_gamma, K=K, bound=rhs, penalty_source=source,
                   median_error=float(rows["statistic"].median()), spec=spec.to_dict())
    report = McReport.from_rows("verify-error", rows, q1 + q2, details)
    logger.info("verify-error: %d/%d violations, median error %.6g, pass=%s",
                report.violations, report.trials, details["median_error"], report.passed)
    return report


@dataclass
class ScalingReport:
    """Median l2 errors across sample sizes and their successive ratios."""

    sizes: List[int]
    medians: List[float]
    ratios: List[float]
    penalty_scale: float
    passed: bool
    rows: pd.DataFrame = field(repr=False, default_factory=pd.DataFrame)
    ratio_range: tuple = (1.3, 3.0)
    name: str = "verify-scaling"
    csv_path: Optional[str] = None

    def to_dict(self) -> Dict:
        return {
            "name": self.name,
            "sizes": self.sizes,
            "medians": self.medians,
            "ratios": self.ratios,
            "ratio_range": list(self.ratio_range),
            "penalty_scale": self.penalty_scale,
            "pass": self.passed,
            "csv_path": self.csv_path,
        }


def verify_scaling(spec: SimSpec, sizes: Sequence[int] = (100, 400, 1600), K: float = 3.0,
                   q1: float = 0.05, q2: float = 0.05, trials: int = 200,
                   penalty_scale: float = 0.01, threads: int = 1,
                   ratio_range=(1.3, 3.0)) -> ScalingReport:
    """
    Median |theta_hat - theta*|_2 over ``trials`` fits at each N, with the
    theoretical penalty re-derived per N and multiplied by ``penalty_scale``.

    Passes when the medians decrease and, for sizes four times apart, each
    ratio median(N) / median(4N) lies in ``ratio_range``.
    """
    if not spec.family.is_convex:
        raise UnsupportedError("the scaling study needs a convex likelihood family")
    if penalty_scale <= 0:
        raise DomainError("penalty_scale must be positive")
    frames, medians = [], []
    for N in sizes:
        sized = spec.replace(N=int(N), trials=trials, variances=None)
        setup = theoretical_penalty(sized, q1, q2, K)
        run = _l2_errors(sized, penalty_scale * setup["lambda"])
        frame = pd.DataFrame.from_records(_map_trials(run, trials, threads))
        frame.insert(0, "N", int(N))
        frames.append(frame)
        medians.append(float(frame["error"].median()))
        logger.info("verify-scaling: N=%d median error %.6g", N, medians[-1])
    ratios = [a / b if b > 0 else math.inf for a, b in zip(medians, medians[1:])]
    decreasing = all(b < a for a, b in zip(medians, medians[1:]))
    lo, hi = ratio_range
    in_range = all(lo <= r <= hi for r, n1, n2 in zip(ratios, sizes, sizes[1:]) if n2 == 4 * n1)
    return ScalingReport(list(map(int, sizes)), medians, ratios, penalty_scale,
                         decreasing and in_range, pd.concat(frames, ignore_index=True),
                         tuple(ratio_range))
