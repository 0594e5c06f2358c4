"""
GLM loss families with exact derivative oracles.

A :class:`LossFamily` describes a loss gamma(t, y) on a compact working interval
[a, b] of the linear index t. The functions in this module evaluate the loss and
its t-derivatives in closed form, extract the regularity constants F_m, F_{m+1}
the tail bounds need, and provide the Kullback-Leibler quantities used by the
curvature condition of the Lasso error bound.

All functions are pure and accept numpy arrays; scalar inputs give floats.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, Tuple, Union

import numpy as np
from scipy.special import expit

from .enums import LinkFn, LossKind
from .errors import DegenerateError, DomainError, UnsupportedError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

GRID_POINTS = 2001
SUP_SAFETY = 1.05
INF_SAFETY = 0.95
CURVATURE_FLOOR = 1e-12
MAX_ORDER = 3

# Interior extrema of |sigma^(k)|, i.e. the roots of sigma^(k+1), k = 0..3.
_SIGMOID_CRITICAL = {
    0: (),
    1: (0.0,),
    2: (-math.log(2.0 + math.sqrt(3.0)), math.log(2.0 + math.sqrt(3.0))),
    3: (-math.log(5.0 + 2.0 * math.sqrt(6.0)), 0.0, math.log(5.0 + 2.0 * math.sqrt(6.0))),
}

_QUAD_X, _QUAD_W = np.polynomial.legendre.leggauss(32)
_QUAD_U = 0.5 * (_QUAD_X + 1.0)
_QUAD_W = 0.5 * _QUAD_W


@dataclass(frozen=True)
class LossFamily:
    """
    A GLM loss gamma(t, y) restricted to the working interval [a, b].

    Attributes:
        kind: Logistic, GaussianSquare or PoissonLog.
        interval: finite (a, b) with a < b on which derivative bounds are taken.
        link: mean link f of the square loss (GaussianSquare only).
        sigma0: noise scale of the square loss (GaussianSquare only).
    """

    kind: LossKind
    interval: Tuple[float, float] = (-1.0, 1.0)
    link: LinkFn = LinkFn.IDENTITY
    sigma0: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", LossKind(self.kind))
        object.__setattr__(self, "link", LinkFn(self.link))
        a, b = (float(v) for v in self.interval)
        if not (math.isfinite(a) and math.isfinite(b)) or a >= b:
            raise DomainError(f"loss interval must be finite with a < b, got ({a}, {b})")
        if not (math.isfinite(self.sigma0) and self.sigma0 > 0):
            raise DomainError(f"sigma0 must be positive, got {self.sigma0}")
        object.__setattr__(self, "interval", (a, b))
        object.__setattr__(self, "sigma0", float(self.sigma0))

    @classmethod
    def logistic(cls, interval=(-1.0, 1.0)) -> "LossFamily":
        return cls(LossKind.LOGISTIC, interval)

    @classmethod
    def gaussian_square(cls, link=LinkFn.IDENTITY, sigma0: float = 1.0,
                        interval=(-1.0, 1.0)) -> "LossFamily":
        return cls(LossKind.GAUSSIAN_SQUARE, interval, LinkFn(link), sigma0)

    @classmethod
    def poisson_log(cls, interval=(-1.0, 1.0)) -> "LossFamily":
        return cls(LossKind.POISSON_LOG, interval)

    def with_interval(self, interval) -> "LossFamily":
        return LossFamily(self.kind, interval, self.link, self.sigma0)

    @property
    def has_likelihood(self) -> bool:
        """True when gamma is a negative log-likelihood with a closed-form KL"""
        if self.kind == LossKind.GAUSSIAN_SQUARE:
            return self.link == LinkFn.IDENTITY
        return True

    @property
    def is_convex(self) -> bool:
        return self.has_likelihood

    def admissible_y(self) -> np.ndarray:
        """Test set of responses over which derivative bounds are taken"""
        if self.kind == LossKind.LOGISTIC:
            return np.array([0.0, 1.0])
        if self.kind == LossKind.POISSON_LOG:
            return np.array([0.0, 1.0, 2.0, 5.0, 10.0])
        ends = link_deriv(self.link, np.array(self.interval), 0)
        offsets = np.array([-3.0, -1.0, 0.0, 1.0, 3.0]) * self.sigma0
        return np.unique((ends[:, None] + offsets[None, :]).ravel())

    def to_dict(self) -> Dict:
        out = {"kind": self.kind.value, "interval": list(self.interval)}
        if self.kind == LossKind.GAUSSIAN_SQUARE:
            out.update(link=self.link.value, sigma0=self.sigma0)
        return out


@dataclass(frozen=True)
class DerivBounds:
    """
    Regularity constants of a loss or link.

    F_m bounds |d^m g / dt^m| and F_mplus1 bounds its Lipschitz constant, where g
    is the loss itself (form="loss") or the mean link of the square loss
    (form="link").
    """

    m: int
    F_m: float
    F_mplus1: float
    form: str = "loss"
    method: str = "closed_form"

    def to_dict(self) -> Dict:
        return {"m": self.m, "F_m": self.F_m, "F_mplus1": self.F_mplus1,
                "form": self.form, "method": self.method}


def _output(value: np.ndarray, *inputs) -> ArrayLike:
    if all(np.ndim(x) == 0 for x in inputs):
        return float(value)
    return value


def link_deriv(link: LinkFn, t: ArrayLike, order: int) -> np.ndarray:
    """Return f^(order)(t) for the mean link f, order 0..3."""
    t = np.asarray(t, dtype=float)
    link = LinkFn(link)
    if link == LinkFn.IDENTITY:
        if order == 0:
            return t.copy()
        return np.full_like(t, 1.0 if order == 1 else 0.0)
    if link == LinkFn.SIGMOID:
        s = expit(t)
        ds = s * (1.0 - s)
        return (s, ds, ds * (1.0 - 2.0 * s), ds * (1.0 - 6.0 * ds))[order]
    u = np.tanh(t)
    du = 1.0 - u * u
    return (u, du, -2.0 * u * du, du * (6.0 * u * u - 2.0))[order]


def _link_critical(link: LinkFn, order: int) -> Tuple[float, ...]:
    if link == LinkFn.IDENTITY:
        return ()
    if link == LinkFn.SIGMOID:
        return _SIGMOID_CRITICAL[order]
    # tanh(t) = 2 sigmoid(2t) - 1
    return tuple(c / 2.0 for c in _SIGMOID_CRITICAL[order])


def check_response(family: LossFamily, y: ArrayLike) -> None:
    """Raise DomainError unless every y lies in the family's response set."""
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise DomainError("responses must be finite")
    if family.kind == LossKind.LOGISTIC and not np.all((y == 0.0) | (y == 1.0)):
        raise DomainError("logistic responses must be 0 or 1")
    if family.kind == LossKind.POISSON_LOG and not np.all((y >= 0.0) & (y == np.floor(y))):
        raise DomainError("poisson responses must be non-negative integers")


def gamma_deriv(family: LossFamily, t: np.ndarray, y: np.ndarray, order: int) -> np.ndarray:
    if family.kind == LossKind.LOGISTIC:
        if order == 0:
            return np.logaddexp(0.0, t) - y * t
        if order == 1:
            return expit(t) - y
        return link_deriv(LinkFn.SIGMOID, t, order - 1) + 0.0 * y
    if family.kind == LossKind.POISSON_LOG:
        e = np.exp(t)
        if order == 0:
            return e - y * t
        if order == 1:
            return e - y
        return e + 0.0 * y
    f = [link_deriv(family.link, t, k) for k in range(order + 1)]
    r = f[0] - y
    if order == 0:
        return 0.5 * r * r
    if order == 1:
        return r * f[1]
    if order == 2:
        return f[1] * f[1] + r * f[2]
    return 3.0 * f[1] * f[2] + r * link_deriv(family.link, t, 3)


def loss_value(family: LossFamily, t: ArrayLike, y: ArrayLike) -> ArrayLike:
    """
    Evaluate gamma(t, y).

    Raises:
        DomainError: if y is not an admissible response of the family.
    """
    check_response(family, y)
    return _output(gamma_deriv(family, np.asarray(t, float), np.asarray(y, float), 0), t, y)


def loss_deriv(family: LossFamily, t: ArrayLike, y: ArrayLike, order: int) -> ArrayLike:
    """
    Exact order-th partial derivative of gamma in t; order 0 is the loss itself.

    Raises:
        UnsupportedError: order outside 0..3.
        DomainError: inadmissible y.
    """
    if int(order) != order or not 0 <= order <= MAX_ORDER:
        raise UnsupportedError(f"derivative order must be in 0..{MAX_ORDER}, got {order}")
    check_response(family, y)
    return _output(gamma_deriv(family, np.asarray(t, float), np.asarray(y, float), int(order)), t, y)


def _sup_abs(values: np.ndarray) -> float:
    return float(np.max(np.abs(values)))


def _candidate_points(interval: Tuple[float, float], critical: Iterable[float]) -> np.ndarray:
    a, b = interval
    inside = [c for c in critical if a < c < b]
    return np.array([a, b] + inside)


def _closed_form_available(family: LossFamily, form: str) -> bool:
    if family.kind == LossKind.LOGISTIC:
        return True
    if family.kind == LossKind.GAUSSIAN_SQUARE:
        return form == "link" or family.link == LinkFn.IDENTITY
    return False


def _sup_loss_deriv(family: LossFamily, order: int, points: np.ndarray) -> float:
    y = family.admissible_y()
    return _sup_abs(gamma_deriv(family, points[:, None], y[None, :], order))


def _check_order(m: int) -> None:
    if int(m) != m or not 0 <= m <= 2:
        raise DomainError(f"bound order m must be in {{0, 1, 2}}, got {m}")


def loss_derivative_bounds(family: LossFamily, m: int) -> DerivBounds:
    """
    Bounds on |d^m gamma/dt^m| and its Lipschitz constant over the interval and
    the admissible responses.

    Logistic and identity-link square losses use closed forms (extrema at
    endpoints or at roots of the next derivative); other families maximize over
    a 2001-point grid and inflate by 5%.
    """
    _check_order(m)
    if _closed_form_available(family, "loss"):
        bounds = []
        for order in (m, m + 1):
            critical = _SIGMOID_CRITICAL[order - 1] if (
                family.kind == LossKind.LOGISTIC and order >= 1) else ()
            points = _candidate_points(family.interval, critical)
            bounds.append(_sup_loss_deriv(family, order, points))
        return DerivBounds(m, bounds[0], bounds[1], "loss", "closed_form")
    grid = np.linspace(*family.interval, GRID_POINTS)
    F_m = SUP_SAFETY * _sup_loss_deriv(family, m, grid)
    F_mplus1 = SUP_SAFETY * _sup_loss_deriv(family, m + 1, grid)
    logger.debug("grid bounds for %s, m=%d: F_m=%g F_m+1=%g", family.kind.value, m, F_m, F_mplus1)
    return DerivBounds(m, F_m, F_mplus1, "loss", "grid")


def link_derivative_bounds(family: LossFamily, m: int) -> DerivBounds:
    """Bounds on |f^(m)| and Lip(f^(m)) for the square-loss link f."""
    _check_order(m)
    if family.kind != LossKind.GAUSSIAN_SQUARE:
        raise UnsupportedError("link bounds are defined for the square loss only")
    bounds = []
    for order in (m, m + 1):
        points = _candidate_points(family.interval, _link_critical(family.link, order))
        bounds.append(_sup_abs(link_deriv(family.link, points, order)))
    return DerivBounds(m, bounds[0], bounds[1], "link", "closed_form")


def derivative_bounds(family: LossFamily, m: int) -> DerivBounds:
    """
    Regularity constants (F_m, F_{m+1}) for the family.

    For GaussianSquare the constants refer to the mean link f (the form used by
    the Gaussian-noise bounds); otherwise they refer to gamma itself.
    """
    if family.kind == LossKind.GAUSSIAN_SQUARE:
        return link_derivative_bounds(family, m)
    return loss_derivative_bounds(family, m)


def _require_likelihood(family: LossFamily) -> None:
    if not family.has_likelihood:
        raise UnsupportedError(
            f"{family.kind.value} with {family.link.value} link has no likelihood semantics")


def fisher_information(family: LossFamily, t: ArrayLike) -> ArrayLike:
    """Fisher information I(t) of the family at index t."""
    _require_likelihood(family)
    ta = np.asarray(t, dtype=float)
    if family.kind == LossKind.LOGISTIC:
        s = expit(ta)
        value = s * (1.0 - s)
    elif family.kind == LossKind.POISSON_LOG:
        value = np.exp(ta)
    else:
        value = np.full_like(ta, 1.0 / family.sigma0 ** 2)
    return _output(value, t)


def kl_distance(family: LossFamily, t: ArrayLike, s: ArrayLike) -> ArrayLike:
    """
    D(t, s) = E[l(s, Y) - l(t, Y)] for Y drawn from the model at index t.

    Raises:
        UnsupportedError: the family has no likelihood interpretation.
    """
    _require_likelihood(family)
    ta = np.asarray(t, dtype=float)
    sa = np.asarray(s, dtype=float)
    h = sa - ta
    if family.kind == LossKind.LOGISTIC:
        value = np.logaddexp(0.0, sa) - np.logaddexp(0.0, ta) - expit(ta) * h
    elif family.kind == LossKind.POISSON_LOG:
        value = np.exp(ta) * (np.expm1(h) - h)
    else:
        value = 0.5 * h * h / family.sigma0 ** 2
    return _output(np.maximum(value, 0.0), t, s)


def kl_ratio(family: LossFamily, t: ArrayLike, s: ArrayLike) -> ArrayLike:
    """
    D(t, s) / (t - s)^2 via the integral form of the Bregman remainder,

        D(t, s) / (s - t)^2 = int_0^1 (1 - w) I(t + w (s - t)) dw,

    which has no cancellation near the diagonal; equals I(t)/2 at s = t.
    """
    _require_likelihood(family)
    ta = np.asarray(t, dtype=float)
    sa = np.asarray(s, dtype=float)
    nodes = ta[..., None] + _QUAD_U * (sa - ta)[..., None]
    info = np.asarray(fisher_information(family, nodes))
    return _output(np.sum(_QUAD_W * (1.0 - _QUAD_U) * info, axis=-1), t, s)


def curvature_constant(family: LossFamily, grid_points: int = GRID_POINTS) -> float:
    """
    C_F with D(t, s) >= C_F (t - s)^2 on the working interval.

    Minimum of D(t, s)/(t - s)^2 over a grid of [a, b]^2 without the diagonal,
    shrunk by 5%.

    Raises:
        DegenerateError: the constant falls below 1e-12.
    """
    _require_likelihood(family)
    grid = np.linspace(*family.interval, grid_points)
    best = math.inf
    chunk = 32
    for start in range(0, grid_points, chunk):
        rows = grid[start:start + chunk]
        ratio = np.asarray(kl_ratio(family, rows[:, None], grid[None, :]))
        idx = np.arange(start, start + rows.size)
        ratio[np.arange(rows.size), idx] = np.inf
        best = min(best, float(ratio.min()))
    c_f = INF_SAFETY * best
    if not c_f >= CURVATURE_FLOOR:
        raise DegenerateError(f"curvature constant {c_f:g} below floor {CURVATURE_FLOOR:g}")
    return c_f


def expected_loss(family: LossFamily, t: ArrayLike, t0: ArrayLike, variance: ArrayLike = 0.0) -> np.ndarray:
    """E[gamma(t, Y)] for Y drawn from the model at true index t0."""
    t = np.asarray(t, dtype=float)
    t0 = np.asarray(t0, dtype=float)
    if family.kind == LossKind.LOGISTIC:
        return np.logaddexp(0.0, t) - expit(t0) * t
    if family.kind == LossKind.POISSON_LOG:
        return np.exp(t) - np.exp(t0) * t
    diff = link_deriv(family.link, t0, 0) - link_deriv(family.link, t, 0)
    return 0.5 * diff * diff + 0.5 * np.asarray(variance, dtype=float)


def expected_loss_deriv(family: LossFamily, t: ArrayLike, t0: ArrayLike) -> np.ndarray:
    """E[d gamma(t, Y)/dt] for Y drawn from the model at true index t0."""
    t = np.asarray(t, dtype=float)
    t0 = np.asarray(t0, dtype=float)
    if family.kind == LossKind.LOGISTIC:
        return expit(t) - expit(t0)
    if family.kind == LossKind.POISSON_LOG:
        return np.exp(t) - np.exp(t0)
    diff = link_deriv(family.link, t, 0) - link_deriv(family.link, t0, 0)
    return diff * link_deriv(family.link, t, 1)
