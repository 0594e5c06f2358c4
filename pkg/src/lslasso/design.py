"""
Fixed design matrices and box parameter domains.

This module contains the design matrix X (rows X_i = h(Z_i)), the compact box
domain D0 of candidate parameters, and the checks tying them to the working
interval of a loss family.
"""

import itertools
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional, Tuple, Union

import numpy as np
import pandas as pd

from .errors import DomainError

logger = logging.getLogger(__name__)

FEASIBILITY_MARGIN = 1e-9
MAX_VERTEX_DIM = 12


@dataclass(frozen=True)
class DesignMatrix:
    """An N x p matrix of finite reals with read-only storage."""

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise DomainError(f"design must be a non-empty N x p matrix, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DomainError("design entries must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def column(self, j: int) -> np.ndarray:
        """Column view V_j."""
        return self.values[:, j]

    def scaled(self, factors) -> "DesignMatrix":
        """Return X diag(factors)."""
        return DesignMatrix(self.values * np.asarray(factors, dtype=float)[None, :])

    @classmethod
    def from_csv(cls, path: Union[str, Path], header: bool = False) -> "DesignMatrix":
        """
        Read a design from CSV, one observation per row.

        Args:
            path: CSV file.
            header: True when the first row holds column names.
        """
        frame = pd.read_csv(path, header=0 if header else None)
        try:
            values = frame.to_numpy(dtype=float)
        except ValueError as e:
            raise DomainError(f"{path}: design entries must be numeric ({e})") from e
        return cls(values)

    def to_csv(self, path: Union[str, Path], header: bool = False) -> Path:
        columns = [f"x{j + 1}" for j in range(self.p)]
        pd.DataFrame(self.values, columns=columns).to_csv(
            path, index=False, header=header, float_format="%.17g")
        return Path(path)


def as_array(X: Union[DesignMatrix, np.ndarray]) -> np.ndarray:
    if isinstance(X, DesignMatrix):
        return X.values
    return DesignMatrix(X).values


def read_response(path: Union[str, Path], column: Optional[str] = None,
                  header: bool = False) -> np.ndarray:
    """
    Read a response vector from CSV.

    With ``column`` set the file must have a header and the named column is
    used; otherwise the file must contain a single column.
    """
    if column is not None:
        frame = pd.read_csv(path)
        if column not in frame.columns:
            raise DomainError(f"{path}: no response column '{column}'")
        series = frame[column]
    else:
        frame = pd.read_csv(path, header=0 if header else None)
        if frame.shape[1] != 1:
            raise DomainError(f"{path}: expected one response column, found {frame.shape[1]}")
        series = frame.iloc[:, 0]
    y = series.to_numpy(dtype=float)
    if not np.all(np.isfinite(y)):
        raise DomainError(f"{path}: responses must be finite")
    return y


@dataclass(frozen=True)
class ParamDomain:
    """Axis-aligned box D0 = prod_j [lower_j, upper_j]."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.array(self.lower, dtype=float).ravel()
        upper = np.array(self.upper, dtype=float).ravel()
        if lower.shape != upper.shape or lower.size < 1:
            raise DomainError("box bounds must be non-empty vectors of equal length")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise DomainError("box bounds must be finite")
        bad = np.flatnonzero(lower >= upper)
        if bad.size:
            raise DomainError(f"box requires lower < upper, violated at coordinate {int(bad[0])}")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def box(cls, p: int, low: float, high: float) -> "ParamDomain":
        return cls(np.full(p, float(low)), np.full(p, float(high)))

    @property
    def p(self) -> int:
        return self.lower.size

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, v, tol: float = 0.0) -> bool:
        v = np.asarray(v, dtype=float)
        return bool(np.all(v >= self.lower - tol) and np.all(v <= self.upper + tol))

    def clip(self, v) -> np.ndarray:
        return np.clip(v, self.lower, self.upper)

    def vertices(self) -> Iterator[np.ndarray]:
        """All 2^p box vertices in binary counting order (coordinate 0 slowest)."""
        for bits in itertools.product((0, 1), repeat=self.p):
            mask = np.array(bits, dtype=bool)
            yield np.where(mask, self.upper, self.lower)

    def vertex_array(self) -> np.ndarray:
        if self.p > MAX_VERTEX_DIM:
            raise DomainError(f"vertex enumeration limited to p <= {MAX_VERTEX_DIM}")
        bits = np.array(list(itertools.product((0, 1), repeat=self.p)), dtype=bool)
        return np.where(bits, self.upper[None, :], self.lower[None, :])

    def to_dict(self):
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}


def column_scales(X: Union[DesignMatrix, np.ndarray]) -> np.ndarray:
    """
    Column scales d_j = max_i |X_ij|.

    Raises:
        DomainError: some column is identically zero.
    """
    values = as_array(X)
    d = np.max(np.abs(values), axis=0)
    zero = np.flatnonzero(d == 0.0)
    if zero.size:
        raise DomainError(f"column {int(zero[0])} is identically zero; scale undefined")
    return d


def index_range(X: Union[DesignMatrix, np.ndarray], dom: ParamDomain) -> Tuple[np.ndarray, np.ndarray]:
    """Per-row min and max of X_i^T v over the box, by sign split."""
    values = as_array(X)
    if values.shape[1] != dom.p:
        raise DomainError(f"design has {values.shape[1]} columns but the box has {dom.p}")
    at_lower = values * dom.lower[None, :]
    at_upper = values * dom.upper[None, :]
    hi = np.maximum(at_lower, at_upper).sum(axis=1)
    lo = np.minimum(at_lower, at_upper).sum(axis=1)
    return lo, hi


def first_infeasible_row(X, dom: ParamDomain, interval: Tuple[float, float],
                         margin: float = FEASIBILITY_MARGIN) -> Optional[int]:
    a, b = interval
    lo, hi = index_range(X, dom)
    bad = np.flatnonzero((lo <= a + margin) | (hi >= b - margin))
    return int(bad[0]) if bad.size else None


def check_feasibility(X, dom: ParamDomain, interval: Tuple[float, float],
                      margin: float = FEASIBILITY_MARGIN) -> bool:
    """
    True iff X_i^T v stays strictly inside (a, b) for every row i and v in D0.
    """
    row = first_infeasible_row(X, dom, interval, margin)
    if row is not None:
        lo, hi = index_range(X, dom)
        logger.warning("row %d leaves the working interval %s: index range [%g, %g]",
                       row, tuple(interval), lo[row], hi[row])
        return False
    return True


def weighted_l1_diameter(dom: ParamDomain, d) -> Tuple[float, float]:
    """
    Return (R, Delta): the d-weighted and unweighted l1 diameters of the box.
    """
    d = np.asarray(d, dtype=float)
    if d.shape != dom.lower.shape:
        raise DomainError(f"expected {dom.p} scales, got {d.size}")
    widths = dom.widths
    return float(np.sum(d * widths)), float(np.sum(widths))
