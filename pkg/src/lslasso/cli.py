"""
Command-line front end.

    lslasso <subcommand> [--config run.toml] [flags]

Flags override values from the configuration file. Exit codes: 0 when every
check passes, 1 when a check fails or cannot be carried out, 2 for usage and
configuration errors.
"""

import argparse
import dataclasses
import logging
import math
import os
import sys
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from . import __version__, rng
from .acceptance import run_acceptance
from .bounds import (bounded_constants, bounded_threshold, coefficient_bound_m1,
                     coefficient_bound_m1_gaussian, gaussian_constants, gaussian_threshold,
                     xi1_threshold_bounded, xi1_threshold_gaussian)
from .config import LOG_FILE_NAME, SUBCOMMANDS, RunConfig, parse_config, setup_logging
from .design import DesignMatrix, column_scales, read_response, weighted_l1_diameter
from .enums import DesignKind, Regime, ReMethod, Stream
from .errors import (ConfigError, DomainError, InfeasibleError, LslassoError, UnsupportedError,
                     extract_error_info)
from .harness import (simulate, theoretical_penalty, verify_l2_bound, verify_massart,
                      verify_scaling, verify_tail_bounded, verify_tail_gaussian, verify_xi1)
from .losses import derivative_bounds, loss_derivative_bounds
from .reports import Report, emit_report
from .restricted_eigenvalue import KAPPA_FLOOR, restricted_eigenvalue
from .solver import LassoProblem, fit

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

# (flag, type); the RunConfig key is the flag name with dashes as underscores
_FLAGS = [
    ("--seed", int), ("--threads", int), ("--output-dir", str), ("--trials", int),
    ("--trial", int), ("--log-level", str),
    ("--design-csv", str), ("--response-csv", str), ("--response-column", str),
    ("--family", str), ("--link", str), ("--sigma0", float), ("--noise-variance", float),
    ("--interval-low", float), ("--interval-high", float), ("--regime", str),
    ("--N", int), ("--p", int), ("--s0", int), ("--design", str), ("--design-scale", float),
    ("--box-low", float), ("--box-high", float),
    ("--m", int), ("--q", float), ("--qprime", float), ("--q1", float), ("--q2", float),
    ("--K", float), ("--threshold-scale", float),
    ("--penalty", float), ("--penalty-scale", float), ("--kkt-tol", float),
    ("--max-iter", int), ("--restarts", int),
    ("--s", int), ("--re-mode", str), ("--re-iterations", int),
    ("--budget-random", int), ("--budget-local", int), ("--budget-random-vertices", int),
    ("--massart-p", int), ("--massart-trials", int), ("--acceptance-scale", str),
]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat TOML configuration file")
    common.add_argument("--include-timestamp", action="store_true", default=None,
                        help="add a generation timestamp to the JSON reports")
    common.add_argument("--design-header", action="store_true", default=None,
                        help="design and response CSV files start with a header row")
    common.add_argument("--sizes", type=int, nargs="+", help="sample sizes of verify-scaling")
    for flag, kind in _FLAGS:
        common.add_argument(flag, type=kind, default=None)

    parser = argparse.ArgumentParser(
        prog="lslasso",
        description="Tail bounds, weighted-l1 GLM estimation and Monte-Carlo verification.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _overrides(args: argparse.Namespace) -> Dict:
    keys = [flag[2:].replace("-", "_") for flag, _ in _FLAGS]
    keys += ["include_timestamp", "design_header", "sizes", "subcommand"]
    return {key: getattr(args, key) for key in keys}


def _spec(cfg: RunConfig):
    """SimSpec of the run; a design file fixes N and p."""
    if cfg.design_csv is not None:
        X = DesignMatrix.from_csv(cfg.design_csv, header=cfg.design_header)
        cfg = dataclasses.replace(cfg, N=X.N, p=X.p, s0=min(cfg.s0, X.p),
                                  design=DesignKind.FROM_FILE.value)
    return cfg.sim_spec()


def run_bounds(cfg: RunConfig) -> Report:
    spec = _spec(cfg)
    X = spec.design_matrix
    d = column_scales(X)
    R, delta = weighted_l1_diameter(spec.domain, d)
    payload = {
        "family": spec.family.to_dict(), "regime": spec.regime.value, "N": spec.N, "p": spec.p,
        "d": d.tolist(), "R": R, "Delta": delta, "m": cfg.m, "q": cfg.q, "qprime": cfg.qprime,
    }
    if spec.regime == Regime.BOUNDED:
        b = loss_derivative_bounds(spec.family, cfg.m)
        F1 = loss_derivative_bounds(spec.family, 1).F_m
        c = bounded_constants(X, d, b.F_m, b.F_mplus1, R, cfg.m)
        payload.update(threshold=bounded_threshold(c, spec.p, cfg.q),
                       xi1_threshold=xi1_threshold_bounded(F1, spec.N, spec.p, cfg.qprime))
        if cfg.m == 1:
            payload["M"] = coefficient_bound_m1(c, F1, spec.N, spec.p, cfg.q, cfg.qprime)
            payload["penalty"] = theoretical_penalty(spec, cfg.q1, cfg.q2, cfg.K)
    else:
        b = derivative_bounds(spec.family, cfg.m)
        F1 = derivative_bounds(spec.family, 1).F_m
        c = gaussian_constants(X, d, spec.sigma0, spec.noise_variances(), b.F_m, b.F_mplus1,
                               R, cfg.m)
        payload.update(threshold=gaussian_threshold(c, spec.p, cfg.m, cfg.q),
                       xi1_threshold=xi1_threshold_gaussian(spec.p, cfg.qprime))
        if cfg.m == 1:
            payload["M"] = coefficient_bound_m1_gaussian(c, F1, spec.p, cfg.q, cfg.qprime)
    payload.update(derivative_bounds=b.to_dict(), constants=c.to_dict(), F1=F1)
    flat = {key: c.to_dict()[key] for key in ("m", "phi", "psi", "A", "B", "C")}
    flat.update({key: payload[key] for key in ("R", "Delta", "threshold", "xi1_threshold", "M")
                 if key in payload})
    return Report("bounds", payload, pd.DataFrame([flat]))


def run_fit(cfg: RunConfig) -> Report:
    spec = _spec(cfg)
    X = spec.design_matrix
    if cfg.response_csv is not None:
        y = read_response(cfg.response_csv, cfg.response_column, cfg.design_header)
        truth = None
    else:
        y = simulate(spec, cfg.trial).y
        truth = spec.theta_star
    if cfg.penalty is not None:
        penalty, source = cfg.penalty, "config"
    else:
        penalty, source = theoretical_penalty(spec, cfg.q1, cfg.q2, cfg.K)["lambda"], "theory"
    result = fit(LassoProblem(X, y, spec.family, spec.domain, penalty), cfg.solver_options())
    rows = pd.DataFrame({"j": np.arange(spec.p), "theta_hat": result.theta_hat})
    payload = dict(result.to_dict(), penalty_source=source, family=spec.family.to_dict())
    if truth is not None:
        rows["theta_star"] = truth
        payload["l2_error"] = float(np.linalg.norm(result.theta_hat - truth))
    return Report("fit", payload, rows, passed=result.converged)


def run_re(cfg: RunConfig) -> Report:
    X = _spec(cfg).design_matrix
    result = restricted_eigenvalue(X, cfg.s, cfg.K, ReMethod(cfg.re_mode), cfg.re_options())
    return Report("re", result.to_dict(), passed=result.kappa > KAPPA_FLOOR)


def run_simulate(cfg: RunConfig) -> Report:
    spec = _spec(cfg)
    dataset = simulate(spec, cfg.trial)
    return Report("simulate", {"spec": spec.to_dict(), "trial": cfg.trial}, dataset.to_frame())


def run_verify_tail(cfg: RunConfig):
    spec = _spec(cfg)
    verify = verify_tail_gaussian if spec.regime == Regime.GAUSSIAN else verify_tail_bounded
    return verify(spec, cfg.q, cfg.qprime, cfg.threads, cfg.threshold_scale, cfg.m)


def run_verify_xi1(cfg: RunConfig):
    spec = _spec(cfg)
    return verify_xi1(spec, cfg.q, spec.regime, cfg.threads)


def run_verify_massart(cfg: RunConfig):
    if cfg.design_csv is not None:
        columns = DesignMatrix.from_csv(cfg.design_csv, header=cfg.design_header).values
    else:
        gen = rng.stream(cfg.seed, 1, Stream.MASSART)
        columns = gen.standard_normal((cfg.N, cfg.massart_p)) / math.sqrt(cfg.N)
    return verify_massart(columns.shape[1], columns, cfg.massart_trials, cfg.seed)


def run_verify_error(cfg: RunConfig):
    return verify_l2_bound(_spec(cfg), cfg.q1, cfg.q2, cfg.K, cfg.threads, cfg.re_options(),
                           cfg.solver_options(), cfg.penalty)


def run_verify_scaling(cfg: RunConfig):
    return verify_scaling(_spec(cfg), cfg.sizes, cfg.K, cfg.q1, cfg.q2, cfg.trials,
                          cfg.penalty_scale, cfg.threads)


def run_acceptance_suite(cfg: RunConfig) -> List:
    return run_acceptance(cfg.acceptance_scale, cfg.threads, cfg.output_dir, cfg.seed)


COMMANDS: Dict[str, Callable[[RunConfig], object]] = {
    "bounds": run_bounds,
    "fit": run_fit,
    "re": run_re,
    "simulate": run_simulate,
    "verify-tail": run_verify_tail,
    "verify-xi1": run_verify_xi1,
    "verify-massart": run_verify_massart,
    "verify-error": run_verify_error,
    "verify-scaling": run_verify_scaling,
    "acceptance": run_acceptance_suite,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one subcommand.

    Args:
        argv: arguments without the program name; None reads sys.argv.

    Returns:
        int: the process exit code.
    """
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config, _overrides(args))
    except ConfigError as e:
        print(f"lslasso: {extract_error_info(e)}", file=sys.stderr)
        return EXIT_USAGE

    setup_logging(cfg.log_level, os.path.join(cfg.output_dir, LOG_FILE_NAME))
    logger.info("lslasso %s: %s (seed %d, %d threads)", __version__, cfg.subcommand, cfg.seed,
                cfg.threads)
    try:
        report = COMMANDS[cfg.subcommand](cfg)
        return emit_report(report, cfg.output_dir, cfg.include_timestamp)
    except (DomainError, UnsupportedError, InfeasibleError) as e:
        logger.error("%s failed: %s", cfg.subcommand, extract_error_info(e))
        print(f"lslasso: {extract_error_info(e)}", file=sys.stderr)
        return EXIT_USAGE
    except LslassoError as e:
        logger.error("%s failed: %s", cfg.subcommand, extract_error_info(e))
        print(f"lslasso: {extract_error_info(e)}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
