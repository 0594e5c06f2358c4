"""
lslasso acceptance runner

Exercises every public capability against its acceptance criterion and logs
one [PASS]/[FAIL] line per check to the console and to a results file in the
output directory.

Scales:
    quick: reduced trial counts and search budgets, a few minutes on a laptop.
    full:  the published trial counts (2,000 coverage trials, 10^5 normal draws).
"""

import math
import os
import traceback
from dataclasses import dataclass
from datetime import datetime
from typing import Callable, Dict, List, Tuple

import numpy as np
from scipy.stats import norm

from . import rng
from .bounds import phi_psi, taylor_remainder
from .design import ParamDomain
from .enums import LinkFn, LossKind, ReMethod, Stream
from .errors import DomainError, extract_error_info
from .harness import (SearchBudget, gaussian_spec, logistic_spec, verify_l2_bound,
                      verify_massart, verify_scaling, verify_tail_bounded,
                      verify_tail_gaussian, verify_xi1)
from .losses import LossFamily, link_deriv, loss_deriv, loss_derivative_bounds
from .reports import Report, to_json
from .restricted_eigenvalue import restricted_eigenvalue
from .solver import LassoProblem, fit, soft_threshold

RESULTS_FILE = "acceptance_results.txt"
TOL = 1e-10


@dataclass(frozen=True)
class Scale:
    coverage_trials: int
    error_trials: int
    scaling_trials: int
    xi1_closed_form_trials: int
    massart_trials: int
    budget: SearchBudget


SCALES = {
    "quick": Scale(200, 100, 50, 20_000, 100_000, SearchBudget(random=512, local=50)),
    "full": Scale(2000, 500, 200, 100_000, 100_000, SearchBudget()),
}


def _remainder_grid(m: int):
    family = LossFamily.logistic((-1.0, 1.0))
    c = np.linspace(-1.0, 1.0, 201)[:, None]
    t = np.linspace(-2.0, 2.0, 201)[None, :]
    inside = np.abs(c + t) <= 1.0
    bounds = loss_derivative_bounds(family, m)
    _, psi = phi_psi(bounds.F_m, bounds.F_mplus1, 2.0, m)
    values = {y: taylor_remainder(family, c, t, y, m) for y in (0.0, 1.0)}
    return family, c, t, inside, bounds, psi, values


def check_remainder_envelope() -> Tuple[bool, Dict]:
    violations = {}
    for m in (0, 1, 2):
        _, _, t, inside, bounds, _, values = _remainder_grid(m)
        envelope = np.minimum(2.0 * bounds.F_m / math.factorial(m),
                              bounds.F_mplus1 * np.abs(t) / math.factorial(m + 1))
        count = 0
        for phi in values.values():
            count += int(np.sum((np.abs(phi) > envelope + TOL) & inside))
        violations[m] = count
    return all(v == 0 for v in violations.values()), {"violations": violations}


def check_remainder_lipschitz() -> Tuple[bool, Dict]:
    violations = {}
    for m in (0, 1, 2):
        _, _, t, inside, _, psi, values = _remainder_grid(m)
        both = inside[:, 1:] & inside[:, :-1]
        dt = np.diff(t, axis=1)
        count = 0
        for phi in values.values():
            count += int(np.sum((np.abs(np.diff(phi, axis=1)) > psi * dt + TOL) & both))
        violations[m] = count
    return all(v == 0 for v in violations.values()), {"violations": violations}


def check_derivative_oracles() -> Tuple[bool, Dict]:
    h = 1e-5
    worst = {}
    families = [
        LossFamily.logistic((-3.0, 3.0)),
        LossFamily.poisson_log((-2.0, 2.0)),
        LossFamily.gaussian_square(LinkFn.IDENTITY, 1.0, (-3.0, 3.0)),
        LossFamily.gaussian_square(LinkFn.SIGMOID, 1.0, (-3.0, 3.0)),
        LossFamily.gaussian_square(LinkFn.TANH, 1.0, (-3.0, 3.0)),
    ]
    for family in families:
        t = np.linspace(*family.interval, 101)[:, None]
        square = family.kind == LossKind.GAUSSIAN_SQUARE
        y = family.admissible_y()
        if square:
            y = np.union1d(y, [-1.0, 0.3, 2.5])
        y = y[None, :]
        label = f"{family.kind.value}/{family.link.value}" if square else family.kind.value
        for order in (1, 2, 3):
            fd = (loss_deriv(family, t + h, y, order - 1)
                  - loss_deriv(family, t - h, y, order - 1)) / (2.0 * h)
            exact = loss_deriv(family, t, y, order)
            err = np.abs(fd - exact) / np.maximum(1.0, np.abs(exact))
            worst[f"{label}:{order}"] = float(np.max(err))
        for order in (1, 2, 3):
            fd = (link_deriv(family.link, t + h, order - 1)
                  - link_deriv(family.link, t - h, order - 1)) / (2.0 * h)
            exact = link_deriv(family.link, t, order)
            worst[f"link/{family.link.value}:{order}"] = float(
                np.max(np.abs(fd - exact) / np.maximum(1.0, np.abs(exact))))
    return max(worst.values()) <= 1e-6, {"max_relative_error": worst}


def check_restricted_eigenvalue(seed: int) -> Tuple[bool, Dict]:
    p = 6
    identity = math.sqrt(p) * np.eye(p)
    kappa_identity = restricted_eigenvalue(identity, 2, 3.0, ReMethod.EXACT_ENUMERATION).kappa

    gen = rng.stream(seed, 0, Stream.RE, 8, 6)
    dup = gen.standard_normal((8, 6))
    dup[:, 1] = dup[:, 0]
    kappa_dup = restricted_eigenvalue(dup, 2, 3.0, ReMethod.EXACT_ENUMERATION).kappa

    X = gen.standard_normal((8, 6))
    table = {}
    for s in (1, 2):
        for K in (1.0, 2.0, 3.0, 5.0):
            table[f"s={s},K={K:g}"] = restricted_eigenvalue(X, s, K).kappa
    tol = 1e-4
    monotone_K = all(table[f"s={s},K={a:g}"] >= table[f"s={s},K={b:g}"] - tol
                     for s in (1, 2) for a, b in ((1.0, 2.0), (2.0, 3.0), (3.0, 5.0)))
    monotone_s = all(table[f"s=1,K={K:g}"] >= table[f"s=2,K={K:g}"] - tol
                     for K in (1.0, 2.0, 3.0, 5.0))
    passed = abs(kappa_identity - 1.0) <= 1e-6 and kappa_dup <= 1e-6 and monotone_K and monotone_s
    return passed, {"kappa_identity": kappa_identity, "kappa_duplicated": kappa_dup,
                    "kappa_table": table, "monotone_in_K": monotone_K, "monotone_in_s": monotone_s}


def check_solver(seed: int) -> Tuple[bool, Dict]:
    # N = p = 1 square loss: theta_hat = soft_threshold(y, lambda)
    square = LossFamily.gaussian_square(LinkFn.IDENTITY, 1.0, (-11.0, 11.0))
    one_d = fit(LassoProblem(np.ones((1, 1)), [2.0], square, ParamDomain.box(1, -10.0, 10.0),
                             0.5))
    closed = float(soft_threshold(2.0, 0.5))
    soft_ok = closed == 1.5 and abs(float(one_d.theta_hat[0]) - closed) <= TOL

    gen = rng.stream(seed, 0, Stream.SOLVER, 2)
    X = 2.0 * gen.integers(0, 2, size=(20, 2)) - 1.0
    y = (gen.random(20) < 1.0 / (1.0 + np.exp(-0.4 * X[:, 0]))).astype(float)
    dom = ParamDomain.box(2, -0.5, 0.5)
    problem = LassoProblem(X, y, LossFamily.logistic((-1.5, 1.5)), dom, 0.3)
    result = fit(problem)
    grid = np.linspace(-0.5, 0.5, 401)
    V = np.array(np.meshgrid(grid, grid, indexing="ij")).reshape(2, -1).T
    T = X @ V.T
    smooth = np.sum(np.logaddexp(0.0, T) - y[:, None] * T, axis=0)
    brute = float(np.min(smooth + 0.3 * np.abs(V).sum(axis=1)))

    X8 = 2.0 * gen.integers(0, 2, size=(100, 8)) - 1.0
    y8 = (gen.random(100) < 0.5).astype(float)
    fit8 = fit(LassoProblem(X8, y8, LossFamily.logistic((-4.5, 4.5)),
                            ParamDomain.box(8, -0.5, 0.5), 2.0))
    residuals = [one_d.kkt_residual, result.kkt_residual, fit8.kkt_residual]
    kkt_ok = max(residuals) <= 1e-8
    passed = soft_ok and abs(result.objective - brute) <= 1e-3 and kkt_ok
    return passed, {"soft_threshold": soft_ok, "theta_one_dimensional": float(one_d.theta_hat[0]),
                    "objective": result.objective, "grid_objective": brute,
                    "kkt_residuals": residuals}


class AcceptanceRunner:
    """Runs the acceptance checks and keeps their reports."""

    def __init__(self, scale: str = "quick", threads: int = 1, output_dir: str = "output",
                 seed: int = 20240611):
        if scale not in SCALES:
            raise DomainError(f"scale must be one of {', '.join(SCALES)}, got {scale}")
        self.scale = SCALES[scale]
        self.scale_name = scale
        self.threads = threads
        self.seed = seed
        self.results: List[Tuple[str, bool]] = []
        self.reports: List[Report] = []
        os.makedirs(output_dir, exist_ok=True)
        self.log_file = os.path.join(output_dir, RESULTS_FILE)
        with open(self.log_file, "w", encoding="utf-8") as f:
            f.write(f"lslasso acceptance ({scale}) - {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}\n")
            f.write("-" * 80 + "\n\n")

    def log(self, message: str, success=None):
        """Log a result line to console and file"""
        status = ""
        if success is not None:
            status = "[PASS]" if success else "[FAIL]"
        line = f"{status} {message}"
        print(line)
        with open(self.log_file, "a", encoding="utf-8") as f:
            f.write(line + "\n")

    def run_test(self, name: str, check: Callable[[], object]) -> bool:
        """Run one check; a check returns (passed, payload) or a verification report."""
        try:
            outcome = check()
            if isinstance(outcome, tuple):
                passed, payload = outcome
                report = Report(name, payload, passed=bool(passed))
            else:
                report = Report(name, outcome.to_dict(), getattr(outcome, "rows", None),
                                passed=bool(outcome.passed))
        except Exception as e:
            traceback.print_exc()
            report = Report(name, {"error": extract_error_info(e)}, passed=False)
        self.reports.append(report)
        self.results.append((name, report.passed))
        self.log(name, report.passed)
        return report.passed

    def _coverage_spec(self, spec):
        return spec.replace(trials=self.scale.coverage_trials, budget=self.scale.budget,
                            seed=self.seed)

    def check_bounded_coverage(self):
        spec = self._coverage_spec(logistic_spec())
        report = verify_tail_bounded(spec, 0.05, 0.05, self.threads)
        inverted = verify_tail_bounded(spec, 0.05, 0.05, self.threads, threshold_scale=1.0 / 50)
        report.details["inverted_violations"] = inverted.violations
        report.passed = report.passed and inverted.violations >= 1
        return report

    def check_gaussian_coverage(self):
        return verify_tail_gaussian(self._coverage_spec(gaussian_spec()), 0.05, 0.05, self.threads)

    def check_xi1(self) -> Tuple[bool, Dict]:
        spec = gaussian_spec(N=100, p=1, s0=1, link=LinkFn.IDENTITY, seed=self.seed,
                             trials=self.scale.xi1_closed_form_trials)
        gaussian = verify_xi1(spec, 0.05, threads=self.threads)
        expected = float(2.0 * norm.sf(math.sqrt(2.0 * math.log(20.0))))
        bounded = verify_xi1(self._coverage_spec(logistic_spec()), 0.05, threads=self.threads)
        passed = abs(gaussian.violation_rate - expected) <= 0.01 and bounded.passed
        return passed, {"gaussian_rate": gaussian.violation_rate, "gaussian_expected": expected,
                        "bounded": bounded.to_dict()}

    def check_massart(self) -> Tuple[bool, Dict]:
        one = verify_massart(1, np.ones((1, 1)), self.scale.massart_trials, self.seed)
        gen = rng.stream(self.seed, 1, Stream.MASSART)
        wide = verify_massart(64, gen.standard_normal((100, 64)) / 10.0,
                              self.scale.massart_trials, self.seed)
        near = abs(one.mc_mean - math.sqrt(2.0 / math.pi)) <= 0.01
        return one.passed and wide.passed and near, {"p1": one.to_dict(), "p64": wide.to_dict()}

    def check_l2_bound(self):
        spec = logistic_spec(trials=self.scale.error_trials, seed=self.seed)
        return verify_l2_bound(spec, 0.05, 0.05, 3.0, self.threads)

    def check_scaling(self):
        spec = logistic_spec(seed=self.seed)
        return verify_scaling(spec, trials=self.scale.scaling_trials, threads=self.threads)

    def check_determinism(self) -> Tuple[bool, Dict]:
        budget = SearchBudget(random=128, local=20)
        logistic = logistic_spec(trials=32, seed=self.seed).replace(budget=budget)
        gaussian = gaussian_spec(trials=32, seed=self.seed).replace(budget=budget)
        runs = {
            "verify-tail-bounded": lambda k: verify_tail_bounded(logistic, 0.05, 0.05, k),
            "verify-tail-gaussian": lambda k: verify_tail_gaussian(gaussian, 0.05, 0.05, k),
            "verify-xi1": lambda k: verify_xi1(logistic, 0.05, threads=k),
            "verify-error": lambda k: verify_l2_bound(logistic.replace(trials=8), 0.05, 0.05,
                                                      3.0, k),
            "verify-scaling": lambda k: verify_scaling(logistic, sizes=(100, 400), trials=4,
                                                       threads=k),
        }
        pooled_threads = max(3, self.threads)
        identical = {}
        for name, run in runs.items():
            single, pooled = run(1), run(pooled_threads)
            identical[name] = (to_json(single.to_dict()) == to_json(pooled.to_dict())
                               and single.rows.equals(pooled.rows))
        same = all(identical.values())
        return same, {"identical": same, "runs": identical, "threads": [1, pooled_threads]}

    def run_all(self) -> List[Report]:
        """Run all checks"""
        self.run_test("acceptance-01-remainder-envelope", check_remainder_envelope)
        self.run_test("acceptance-02-remainder-lipschitz", check_remainder_lipschitz)
        self.run_test("acceptance-03-derivative-oracles", check_derivative_oracles)
        self.run_test("acceptance-04-bounded-coverage", self.check_bounded_coverage)
        self.run_test("acceptance-05-gaussian-coverage", self.check_gaussian_coverage)
        self.run_test("acceptance-06-xi1", self.check_xi1)
        self.run_test("acceptance-07-massart", self.check_massart)
        self.run_test("acceptance-08-restricted-eigenvalue",
                      lambda: check_restricted_eigenvalue(self.seed))
        self.run_test("acceptance-09-solver", lambda: check_solver(self.seed))
        self.run_test("acceptance-10-l2-bound", self.check_l2_bound)
        self.run_test("acceptance-11-scaling", self.check_scaling)
        self.run_test("acceptance-12-determinism", self.check_determinism)
        self.summarize_results()
        return self.reports

    def summarize_results(self):
        total = len(self.results)
        passed = sum(1 for _, ok in self.results if ok)
        summary = (f"\nAcceptance summary ({self.scale_name}):\n"
                   f"Total checks: {total}\nPassed:       {passed}\nFailed:       {total - passed}\n"
                   f"Results saved to: {self.log_file}\n")
        print(summary)
        with open(self.log_file, "a", encoding="utf-8") as f:
            f.write(summary)


def run_acceptance(scale: str = "quick", threads: int = 1, output_dir: str = "output",
                   seed: int = 20240611) -> List[Report]:
    """Run every acceptance check; returns one report per check."""
    return AcceptanceRunner(scale, threads, output_dir, seed).run_all()
