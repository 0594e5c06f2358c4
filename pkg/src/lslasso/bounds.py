"""
Local stochastic Lipschitz tail bounds.

Constants and thresholds for the centered empirical loss process

    xi(v) = sum_i <phi_i(X_i^T (v - theta))> (normalized Taylor remainders)

in the bounded-loss regime and in the Gaussian-noise regime, the xi_1 linear
term thresholds, the combined level M(q, q') of the m = 1 corollaries, and the
simplified constants of the maximum-likelihood example.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .design import DesignMatrix, as_array
from .enums import LossKind, Regime
from .errors import DomainError
from .losses import LossFamily, gamma_deriv, link_deriv

logger = logging.getLogger(__name__)

VARIANCE_TOL = 1e-12


@dataclass(frozen=True)
class LslConstants:
    m: int
    phi: float
    psi: float
    A: float
    B: float
    C: Optional[float]
    regime: Regime = Regime.BOUNDED
    sigma0: Optional[float] = None
    w: Optional[np.ndarray] = None
    lambda_weights: Optional[np.ndarray] = None

    def to_dict(self) -> Dict:
        out = {
            "m": self.m,
            "phi": self.phi,
            "psi": self.psi,
            "A": self.A,
            "B": self.B,
            "C": self.C,
            "regime": self.regime.value,
        }
        if self.regime == Regime.GAUSSIAN:
            out["sigma0"] = self.sigma0
            out["w"] = [float(v) for v in self.w]
            out["lambda_weights"] = [float(v) for v in self.lambda_weights]
        return out


def _check_prob(q: float, name: str = "q") -> float:
    if not 0.0 < q < 1.0:
        raise DomainError(f"{name} must lie in (0, 1), got {q}")
    return float(q)


def _check_pair(q: float, qprime: float) -> None:
    _check_prob(q, "q")
    _check_prob(qprime, "qprime")
    if q + qprime >= 1.0:
        raise DomainError(f"q + qprime must be < 1, got {q + qprime}")


def _log_pm_over_q(p: int, m: int, q: float) -> float:
    return m * math.log(p) - math.log(q)


def phi_psi(F_m: float, F_mplus1: float, R: float, m: int) -> Tuple[float, float]:
    """
    Uniform bound phi and Lipschitz constant psi of the normalized remainder.

    phi = min(2 F_m / m!, F_{m+1} R / (m+1)!); psi is F_1 for m = 0, F_2 / 2 for
    m = 1 and F_{m+1} / m! for m >= 2.
    """
    if min(F_m, F_mplus1, R) < 0 or m < 0:
        raise DomainError("phi_psi requires non-negative constants and order")
    phi = min(2.0 * F_m / math.factorial(m), F_mplus1 * R / math.factorial(m + 1))
    if m == 0:
        psi = F_mplus1
    elif m == 1:
        psi = F_mplus1 / 2.0
    else:
        psi = F_mplus1 / math.factorial(m)
    return float(phi), float(psi)


def _design_sums(X, d, m: int) -> Tuple[float, float]:
    """
    Return (sqrt-moment for A, max_j sum_i U_ij^{2m} for B) from a design or a
    stack of design draws (draws x N x p), U = X / d.
    """
    values = np.asarray(X.values if isinstance(X, DesignMatrix) else X, dtype=float)
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise DomainError("column scales must be positive")
    stack = values[None, ...] if values.ndim == 2 else values
    U = stack / d
    sq = np.max(np.sum(U * U, axis=1), axis=-1)
    if m == 0:
        # x^0 = 1 convention
        power = np.full(stack.shape[0], float(stack.shape[1]))
    else:
        power = np.max(np.sum(U ** (2 * m), axis=1), axis=-1)
    return float(np.mean(np.sqrt(sq))), float(np.mean(power))


def bounded_constants(X, d, F_m: float, F_mplus1: float, R: float, m: int) -> LslConstants:
    """
    Constants A, B, C for a bounded-derivative loss.

    A = 8 psi R sqrt(max_j sum_i U_ij^2), B = phi sqrt(max_j sum_i U_ij^{2m}),
    C = 8 phi with U = X / d. A stack of design draws replaces the maxima by
    their Monte-Carlo means.
    """
    phi, psi = phi_psi(F_m, F_mplus1, R, m)
    root_sq, power = _design_sums(X, d, m)
    return LslConstants(
        m=m,
        phi=phi,
        psi=psi,
        A=8.0 * psi * R * root_sq,
        B=phi * math.sqrt(power),
        C=8.0 * phi,
        regime=Regime.BOUNDED,
    )


def bounded_threshold(c: LslConstants, p: int, q: float) -> float:
    """A sqrt(2 ln 2p) + B sqrt(2 ln(p^m/q)) + C ln(p^m/q)"""
    _check_prob(q)
    log_term = _log_pm_over_q(p, c.m, q)
    return (c.A * math.sqrt(2.0 * math.log(2.0 * p))
            + c.B * math.sqrt(2.0 * log_term)
            + (c.C or 0.0) * log_term)


def xi1_threshold_bounded(F1: float, N: int, p: int, q: float) -> float:
    _check_prob(q)
    return F1 * math.sqrt(2.0 * N * math.log(2.0 * p / q))


def coefficient_bound_m1(c: LslConstants, F1: float, N: int, p: int, q: float,
                         qprime: float) -> float:
    """
    M(q, q') for m = 1 in the bounded regime.

    With probability at least 1 - q - q' the local Lipschitz coefficient of the
    centered empirical loss, in d-weighted l1 distance, does not exceed it.
    """
    _check_pair(q, qprime)
    if c.m != 1 or c.regime != Regime.BOUNDED:
        raise DomainError("coefficient_bound_m1 needs bounded-regime constants with m = 1")
    return bounded_threshold(c, p, q) + xi1_threshold_bounded(F1, N, p, qprime)


def gaussian_weights(X, sigma0: float, variances) -> np.ndarray:
    """w_j = sqrt(sigma0^-2 sum_i var_i X_ij^2)"""
    values = as_array(X)
    variances = np.broadcast_to(np.asarray(variances, dtype=float), (values.shape[0],))
    if np.any(variances < 0):
        raise DomainError("noise variances must be non-negative")
    excess = np.flatnonzero(variances > sigma0 ** 2 * (1.0 + VARIANCE_TOL))
    if excess.size:
        i = int(excess[0])
        raise DomainError(f"variance {variances[i]:g} of row {i} exceeds sigma0^2 = {sigma0 ** 2:g}")
    return np.sqrt(np.sum(variances[:, None] * values * values, axis=0)) / sigma0


def gaussian_constants(X, d, sigma0: float, variances, F_m: float, F_mplus1: float,
                       R: float, m: int) -> LslConstants:
    """
    Constants of the Gaussian-noise regime.

    A and B as in the bounded case, no C term, plus the noise weights w_j and
    the penalty weights lambda_j = max(w_j, d_j).

    Raises:
        DomainError: a variance exceeds sigma0^2.
    """
    if not sigma0 > 0:
        raise DomainError(f"sigma0 must be positive, got {sigma0}")
    w = gaussian_weights(X, sigma0, variances)
    phi, psi = phi_psi(F_m, F_mplus1, R, m)
    root_sq, power = _design_sums(X, d, m)
    return LslConstants(
        m=m,
        phi=phi,
        psi=psi,
        A=8.0 * psi * R * root_sq,
        B=phi * math.sqrt(power),
        C=None,
        regime=Regime.GAUSSIAN,
        sigma0=float(sigma0),
        w=w,
        lambda_weights=np.maximum(w, np.asarray(d, dtype=float)),
    )


def gaussian_threshold(c: LslConstants, p: int, m: int, q: float) -> float:
    """sigma0 (A sqrt(ln 2p) + B sqrt(2 ln(p^m/q)))"""
    _check_prob(q)
    sigma0 = 1.0 if c.sigma0 is None else c.sigma0
    return sigma0 * (c.A * math.sqrt(math.log(2.0 * p))
                     + c.B * math.sqrt(2.0 * _log_pm_over_q(p, m, q)))


def xi1_threshold_gaussian(p: int, q: float) -> float:
    _check_prob(q)
    return math.sqrt(2.0 * math.log(p / q))


def coefficient_bound_m1_gaussian(c: LslConstants, F1: float, p: int, q: float,
                                  qprime: float) -> float:
    """
    M(q, q') = sigma0 [A sqrt(ln 2p) + B sqrt(2 ln(p/q)) + F1 sqrt(2 ln(p/q'))]

    Level of the Gaussian-regime coefficient in lambda-weighted l1 distance.
    """
    _check_pair(q, qprime)
    if c.regime != Regime.GAUSSIAN:
        raise DomainError("coefficient_bound_m1_gaussian needs Gaussian-regime constants")
    return gaussian_threshold(c, p, 1, q) + c.sigma0 * F1 * xi1_threshold_gaussian(p, qprime)


def mle_constants(X, d: float, F1: float, F2: float, delta: float) -> LslConstants:
    """
    Simplified m = 1 constants of the equal-scale likelihood setting:
    A = 4 F2 Delta max_j |V_j|_2, B = (F2/2) Delta max_j |V_j|_2,
    phi = min(2 F1, F2 d Delta / 2), C = 8 phi.
    """
    values = as_array(X)
    d = float(np.max(d))
    if d <= 0 or delta < 0:
        raise DomainError("mle_constants needs d > 0 and delta >= 0")
    max_norm = float(np.max(np.linalg.norm(values, axis=0)))
    phi = min(2.0 * F1, F2 * d * delta / 2.0)
    return LslConstants(
        m=1,
        phi=phi,
        psi=F2 / 2.0,
        A=4.0 * F2 * delta * max_norm,
        B=(F2 / 2.0) * delta * max_norm,
        C=8.0 * phi,
        regime=Regime.BOUNDED,
    )


def penalty_level_terms(c: LslConstants, F1: float, N: int, p: int, q1: float,
                        q2: float) -> Tuple[float, float]:
    """
    Return (M1, M2) with M_q = M1 + M2 failing with probability at most q1 + q2.
    """
    _check_pair(q1, q2)
    log_term = math.log(p / q1)
    M1 = (c.A * math.sqrt(2.0 * math.log(2.0 * p))
          + c.B * math.sqrt(2.0 * log_term)
          + 8.0 * c.phi * log_term)
    return M1, xi1_threshold_bounded(F1, N, p, q2)


def taylor_remainder(family: LossFamily, c, t, y, m: int):
    """
    Normalized Taylor remainder

        phi(t) = t^-m [g(c + t) - sum_{k <= m} g^(k)(c) t^k / k!],  phi(0) = 0,

    where g = gamma(., y), or the mean link f for the square loss (y unused).
    """
    if m not in (0, 1, 2):
        raise DomainError(f"remainder order must be 0, 1 or 2, got {m}")
    c_arr = np.asarray(c, dtype=float)
    t_arr = np.asarray(t, dtype=float)
    if family.kind == LossKind.GAUSSIAN_SQUARE:
        def g(x, k):
            return link_deriv(family.link, x, k)
    else:
        y_arr = np.asarray(y, dtype=float)

        def g(x, k):
            return gamma_deriv(family, x, y_arr, k)

    expansion = sum(g(c_arr, k) * t_arr ** k / math.factorial(k) for k in range(m + 1))
    diff = g(c_arr + t_arr, 0) - expansion
    nonzero = t_arr != 0.0
    safe_t = np.where(nonzero, t_arr, 1.0)
    value = np.where(nonzero, diff / safe_t ** m, 0.0)
    if np.ndim(value) == 0 and all(np.ndim(x) == 0 for x in (c, t, y)):
        return float(value)
    return value
