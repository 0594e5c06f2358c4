"""
lslasso

Local stochastic Lipschitz tail bounds for GLM losses, the weighted-l1
penalized estimator they calibrate, restricted eigenvalue certificates, and a
Monte-Carlo harness that checks the bounds on simulated data.

Example usage:
    Tail level of a logistic model:
        from lslasso import harness, verify_tail_bounded

        spec = harness.logistic_spec(trials=200)
        report = verify_tail_bounded(spec, q=0.05, qprime=0.05)
        print(report.violation_rate, report.passed)

    Fitting:
        from lslasso import LassoProblem, LossFamily, ParamDomain, fit

        problem = LassoProblem(X, y, LossFamily.logistic((-5, 5)), ParamDomain.box(8, -0.5, 0.5), 2.0)
        result = fit(problem)
"""

__version__ = "0.2.0"

from .enums import DesignKind, LinkFn, LossKind, Regime, ReMethod
from .errors import (ConfigError, DegenerateError, DomainError, InfeasibleError, LslassoError,
                     ReportError, UnsupportedError, extract_error_info)
from .losses import (DerivBounds, LossFamily, curvature_constant, derivative_bounds,
                     kl_distance, kl_ratio, loss_deriv, loss_value)
from .design import DesignMatrix, ParamDomain, check_feasibility, column_scales
from .bounds import (LslConstants, bounded_constants, bounded_threshold, coefficient_bound_m1,
                     gaussian_constants, phi_psi, taylor_remainder)
from .solver import LassoFit, LassoProblem, SolverOptions, fit, lambda_from_theory
from .restricted_eigenvalue import ReResult, restricted_eigenvalue
from . import harness
from .harness import (McReport, SimSpec, simulate, verify_l2_bound, verify_massart,
                      verify_tail_bounded, verify_tail_gaussian, verify_xi1)
from .config import RunConfig, parse_config
from .reports import emit_report

__all__ = [
    "DesignKind", "LinkFn", "LossKind", "Regime", "ReMethod",
    "ConfigError", "DegenerateError", "DomainError", "InfeasibleError", "LslassoError",
    "ReportError", "UnsupportedError", "extract_error_info",
    "DerivBounds", "LossFamily", "curvature_constant", "derivative_bounds", "kl_distance",
    "kl_ratio", "loss_deriv", "loss_value",
    "DesignMatrix", "ParamDomain", "check_feasibility", "column_scales",
    "LslConstants", "bounded_constants", "bounded_threshold", "coefficient_bound_m1",
    "gaussian_constants", "phi_psi", "taylor_remainder",
    "LassoFit", "LassoProblem", "SolverOptions", "fit", "lambda_from_theory",
    "ReResult", "restricted_eigenvalue",
    "harness", "McReport", "SimSpec", "simulate", "verify_l2_bound", "verify_massart",
    "verify_tail_bounded", "verify_tail_gaussian", "verify_xi1",
    "RunConfig", "parse_config", "emit_report",
]
