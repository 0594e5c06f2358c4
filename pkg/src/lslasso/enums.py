"""
lslasso enumerations

This module contains the enumeration classes shared by the loss, bound, solver
and harness modules.
"""

import enum


class LossKind(str, enum.Enum):
    """Loss family selector"""
    LOGISTIC = "logistic"
    GAUSSIAN_SQUARE = "gaussian_square"
    POISSON_LOG = "poisson_log"


class LinkFn(str, enum.Enum):
    """Mean link f used by the square loss (y - f(t))^2 / 2"""
    IDENTITY = "identity"
    SIGMOID = "sigmoid"
    TANH = "tanh"


class Regime(str, enum.Enum):
    """Noise regime of the tail bounds"""
    BOUNDED = "bounded"
    GAUSSIAN = "gaussian"


class ReMethod(str, enum.Enum):
    """How a restricted eigenvalue was obtained"""
    EXACT_ENUMERATION = "exact_enumeration"
    HEURISTIC_LOWER_SEARCH = "heuristic_lower_search"


class DesignKind(str, enum.Enum):
    """Source of the simulated design matrix"""
    RADEMACHER = "rademacher"
    UNIFORM_BOX = "uniform_box"
    FROM_FILE = "from_file"


class Stream(enum.IntEnum):
    """Fixed stream ids of the counter-based generator"""
    DESIGN = 0
    NOISE = 1
    SEARCH = 2
    SOLVER = 3
    RE = 4
    MASSART = 5
