"""
Configuration settings for lslasso runs.

This module contains the run defaults, the logging setup, and the RunConfig
document read from flat TOML files (``key = value``) with command-line flags
layered on top.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import os
import re
import tomllib
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

import numpy as np
import psutil

from .design import ParamDomain
from .enums import DesignKind, LinkFn, LossKind, Regime, ReMethod
from .errors import ConfigError
from .harness import SearchBudget, SimSpec
from .losses import LossFamily
from .restricted_eigenvalue import ReOptions
from .solver import SolverOptions

OUTPUT_DIR_ENV = "LSLASSO_OUTPUT_DIR"
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
LOG_FILE_NAME = "lslasso.log"

SUBCOMMANDS = (
    "bounds", "fit", "re", "simulate", "verify-tail", "verify-xi1", "verify-massart",
    "verify-error", "verify-scaling", "acceptance",
)


def default_output_dir() -> str:
    """Output directory from LSLASSO_OUTPUT_DIR, else ./output"""
    return os.environ.get(OUTPUT_DIR_ENV, "output")


def default_threads() -> int:
    return psutil.cpu_count(logical=True) or 1


def setup_logging(level: Union[int, str] = logging.INFO, log_file: Optional[str] = None):
    """Set up logging for lslasso."""
    logging.basicConfig(level=level, format=LOG_FORMAT)
    logger = logging.getLogger('lslasso')
    logger.setLevel(level)
    if log_file:
        os.makedirs(os.path.dirname(os.path.abspath(log_file)), exist_ok=True)
        handler = logging.FileHandler(log_file)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(handler)
    return logger


@dataclass
class RunConfig:
    """
    A fully validated run configuration.

    Every field may appear as a key of the configuration file; flags given on
    the command line override file values.
    """

    subcommand: str = "verify-tail"
    # inputs and outputs
    design_csv: Optional[str] = None
    design_header: bool = False
    response_csv: Optional[str] = None
    response_column: Optional[str] = None
    output_dir: str = field(default_factory=default_output_dir)
    include_timestamp: bool = False
    log_level: str = "INFO"
    # model
    family: str = LossKind.LOGISTIC.value
    link: str = LinkFn.IDENTITY.value
    sigma0: float = 1.0
    noise_variance: Optional[float] = None
    interval_low: float = -4.5
    interval_high: float = 4.5
    regime: str = Regime.BOUNDED.value
    # simulation
    N: int = 100
    p: int = 8
    s0: int = 2
    design: str = DesignKind.RADEMACHER.value
    design_scale: float = 1.0
    theta_magnitude: float = 0.4
    box_low: float = -0.5
    box_high: float = 0.5
    seed: int = 20240611
    trials: int = 2000
    trial: int = 0
    threads: int = field(default_factory=default_threads)
    # bounds
    m: int = 1
    q: float = 0.05
    qprime: float = 0.05
    q1: float = 0.05
    q2: float = 0.05
    K: float = 3.0
    threshold_scale: float = 1.0
    # estimation
    penalty: Optional[float] = None
    penalty_scale: float = 0.01
    sizes: List[int] = field(default_factory=lambda: [100, 400, 1600])
    kkt_tol: float = 1e-8
    max_iter: int = 10_000
    restarts: int = 16
    # restricted eigenvalue
    s: int = 2
    re_mode: str = ReMethod.EXACT_ENUMERATION.value
    re_iterations: int = 2000
    # search budget
    budget_random: int = 4096
    budget_local: int = 200
    budget_random_vertices: int = 4096
    # massart
    massart_p: int = 64
    massart_trials: int = 100_000
    acceptance_scale: str = "quick"

    def to_toml(self) -> str:
        """Canonical TOML form; parse_config of it reproduces this config."""
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            lines.append(f"{f.name} = {_toml_value(value)}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    # builders

    def loss_family(self) -> LossFamily:
        return LossFamily(LossKind(self.family), (self.interval_low, self.interval_high),
                          LinkFn(self.link), self.sigma0)

    def domain(self, p: Optional[int] = None) -> ParamDomain:
        return ParamDomain.box(p or self.p, self.box_low, self.box_high)

    def search_budget(self) -> SearchBudget:
        return SearchBudget(self.budget_random, self.budget_local, self.budget_random_vertices)

    def solver_options(self) -> SolverOptions:
        return SolverOptions(kkt_tol=self.kkt_tol, max_iter=self.max_iter,
                             restarts=self.restarts, seed=self.seed)

    def re_options(self) -> ReOptions:
        return ReOptions(iterations=self.re_iterations, seed=self.seed, threads=self.threads)

    def sim_spec(self) -> SimSpec:
        theta = np.zeros(self.p)
        theta[:self.s0] = self.theta_magnitude * np.where(np.arange(self.s0) % 2 == 0, 1.0, -1.0)
        return SimSpec(
            N=self.N, p=self.p, s0=self.s0,
            theta_star=theta,
            family=self.loss_family(),
            domain=self.domain(),
            design=DesignKind(self.design),
            regime=Regime(self.regime),
            variances=self.noise_variance,
            seed=self.seed,
            trials=self.trials,
            design_scale=self.design_scale,
            design_path=self.design_csv,
            design_header=self.design_header,
            budget=self.search_budget(),
        )


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    return json.dumps(str(value))


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
_KEY_LINE = re.compile(r"^\s*([A-Za-z0-9_-]+)\s*=")

_CHOICES = {
    "subcommand": SUBCOMMANDS,
    "family": tuple(k.value for k in LossKind),
    "link": tuple(k.value for k in LinkFn),
    "regime": tuple(k.value for k in Regime),
    "design": tuple(k.value for k in DesignKind),
    "re_mode": tuple(k.value for k in ReMethod),
    "log_level": ("DEBUG", "INFO", "WARNING", "ERROR"),
    "acceptance_scale": ("quick", "full"),
}


def _key_lines(text: str) -> Dict[str, int]:
    lines = {}
    for number, line in enumerate(text.splitlines(), start=1):
        match = _KEY_LINE.match(line)
        if match:
            lines.setdefault(match.group(1), number)
    return lines


def _coerce(key: str, value, line: Optional[int]):
    kind = _FIELD_TYPES[key]
    optional = kind.startswith("Optional[")
    base = kind[len("Optional["):-1] if optional else kind

    def fail(expected: str):
        raise ConfigError(f"expected {expected}, got {type(value).__name__} {value!r}", key, line)

    if value is None:
        if optional:
            return None
        fail(base)
    if base == "bool":
        if not isinstance(value, bool):
            fail("a boolean")
        return value
    if base == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            fail("an integer")
        return value
    if base == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            fail("a number")
        return float(value)
    if base == "str":
        if not isinstance(value, str):
            fail("a string")
        return value
    if base == "List[int]":
        if not isinstance(value, list) or not all(
                isinstance(v, int) and not isinstance(v, bool) for v in value):
            fail("a list of integers")
        return list(value)
    raise ConfigError(f"unsupported field type {kind}", key, line)


def _validate(cfg: RunConfig, lines: Mapping[str, int]) -> None:
    def fail(key: str, message: str):
        raise ConfigError(message, key, lines.get(key))

    for key, choices in _CHOICES.items():
        if getattr(cfg, key) not in choices:
            fail(key, f"must be one of {', '.join(choices)}")
    for key in ("q", "qprime", "q1", "q2"):
        value = getattr(cfg, key)
        if not 0.0 < value < 1.0:
            fail(key, f"must lie in the open interval (0, 1), got {value}")
    if cfg.q + cfg.qprime >= 1.0:
        fail("qprime", "q + qprime must be < 1")
    if cfg.q1 + cfg.q2 >= 1.0:
        fail("q2", "q1 + q2 must be < 1")
    if not cfg.K > 1.0:
        fail("K", f"must exceed 1, got {cfg.K}")
    for key in ("N", "p", "trials", "threads", "max_iter", "restarts", "s", "re_iterations",
                "massart_p", "massart_trials"):
        if getattr(cfg, key) < 1:
            fail(key, "must be at least 1")
    for key in ("trial", "budget_random", "budget_local", "budget_random_vertices"):
        if getattr(cfg, key) < 0:
            fail(key, "must be non-negative")
    if not 0 <= cfg.s0 <= cfg.p:
        fail("s0", f"must lie in 0..p = {cfg.p}")
    if cfg.m not in (0, 1, 2):
        fail("m", "must be 0, 1 or 2")
    if not cfg.interval_low < cfg.interval_high:
        fail("interval_high", "interval_low < interval_high required")
    if not cfg.box_low < cfg.box_high:
        fail("box_high", "box_low < box_high required")
    for key in ("sigma0", "design_scale", "kkt_tol", "threshold_scale", "penalty_scale"):
        value = getattr(cfg, key)
        if not (math.isfinite(value) and value > 0):
            fail(key, f"must be positive, got {value}")
    if cfg.noise_variance is not None and not 0 <= cfg.noise_variance <= cfg.sigma0 ** 2:
        fail("noise_variance", "must lie in [0, sigma0^2]")
    if cfg.penalty is not None and not cfg.penalty > 0:
        fail("penalty", "must be positive")
    if not cfg.sizes or any(n < 1 for n in cfg.sizes):
        fail("sizes", "must be a non-empty list of positive sample sizes")
    for key in ("design_csv", "response_csv"):
        path = getattr(cfg, key)
        if path is not None and not Path(path).is_file():
            fail(key, f"file not found: {path}")
    if cfg.regime == Regime.GAUSSIAN.value and cfg.family != LossKind.GAUSSIAN_SQUARE.value:
        fail("regime", "the gaussian regime needs family = gaussian_square")
    if cfg.design == DesignKind.FROM_FILE.value and cfg.design_csv is None:
        fail("design", "design 'from_file' needs design_csv")


def parse_config(path: Optional[Union[str, Path]] = None,
                 overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """
    Build a validated RunConfig from a TOML file and command-line overrides.

    Args:
        path: flat TOML document, or None for defaults only.
        overrides: values from flags; entries set to None are ignored.

    Returns:
        RunConfig: the effective configuration.

    Raises:
        ConfigError: unknown key, type mismatch, constraint violation or
            unreadable file, naming the key and line where known.
    """
    values: Dict[str, Any] = {}
    lines: Dict[str, int] = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read configuration file {path}: {e.strerror}") from e
        try:
            document = tomllib.loads(text)
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"{path}: {e}") from e
        lines = _key_lines(text)
        for key, value in document.items():
            if isinstance(value, dict):
                raise ConfigError("nested tables are not supported", key, lines.get(key))
            if key not in _FIELD_TYPES:
                raise ConfigError("unknown configuration key", key, lines.get(key))
            values[key] = _coerce(key, value, lines.get(key))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in _FIELD_TYPES:
            raise ConfigError("unknown configuration key", key)
        values[key] = _coerce(key, value, None)
        lines.pop(key, None)
    cfg = RunConfig(**values)
    _validate(cfg, lines)
    return cfg
