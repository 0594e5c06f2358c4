"""
Restricted eigenvalue kappa(s, K) of a design.

    kappa(s, K) = min |X v|_2 / (sqrt(N) |v_J|_2)
                  over |J| <= s and v != 0 with |v_{J^c}|_1 <= K |v_J|_1.

Each support J is an inner problem: with |v_J|_2 = 1 the squared ratio is the
quadratic form v^T G v, G = X^T X / N, minimized by projected gradient from a
batch of starts. ExactEnumeration visits every support and is the only mode
whose value certifies the condition at the reported accuracy.
"""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import rng
from .design import as_array
from .enums import ReMethod, Stream
from .errors import DomainError, UnsupportedError
from .solver import spectral_norm_sq

logger = logging.getLogger(__name__)

EXACT_MAX_P = 16
EXACT_MAX_S = 3
KAPPA_FLOOR = 1e-6
TIE_TOL = 1e-12


@dataclass
class ReOptions:
    iterations: int = 2000
    inits: int = 64
    heuristic_supports: int = 256
    patience: int = 100
    seed: int = 0
    threads: int = 1


@dataclass
class ReResult:
    kappa: float
    argmin_support: Tuple[int, ...]
    argmin_vector: np.ndarray
    method: ReMethod
    s: int = 0
    K: float = 0.0
    supports_checked: int = 0

    @property
    def certified(self) -> bool:
        return self.method == ReMethod.EXACT_ENUMERATION

    def to_dict(self) -> Dict:
        return {
            "kappa": self.kappa,
            "argmin_support": list(self.argmin_support),
            "argmin_vector": [float(v) for v in self.argmin_vector],
            "method": self.method.value,
            "certified": self.certified,
            "s": self.s,
            "K": self.K,
            "supports_checked": self.supports_checked,
        }


def project_l1_ball(z: np.ndarray, radius: np.ndarray) -> np.ndarray:
    """
    Row-wise Euclidean projection onto {x : |x|_1 <= radius}.

    Finds the soft-threshold level of each row from the sorted magnitudes.
    """
    z = np.atleast_2d(z)
    radius = np.broadcast_to(np.asarray(radius, dtype=float), (z.shape[0],))
    if z.shape[1] == 0:
        return z.copy()
    mag = np.abs(z)
    inside = mag.sum(axis=1) <= radius
    ordered = -np.sort(-mag, axis=1)
    csum = np.cumsum(ordered, axis=1)
    k = np.arange(1, z.shape[1] + 1)
    active = ordered - (csum - radius[:, None]) / k > 0
    rho = np.max(np.where(active, k, 0), axis=1)
    rows = np.arange(z.shape[0])
    level = np.where(rho > 0, (csum[rows, np.maximum(rho, 1) - 1] - radius) / np.maximum(rho, 1), np.inf)
    out = np.sign(z) * np.maximum(mag - level[:, None], 0.0)
    out[inside] = z[inside]
    return out


def ratio(X, v: np.ndarray, support: Sequence[int]) -> float:
    """|X v|_2 / (sqrt(N) |v_J|_2)"""
    values = as_array(X)
    v = np.asarray(v, dtype=float)
    v_J = v[list(support)]
    return float(np.linalg.norm(values @ v) / (math.sqrt(values.shape[0]) * np.linalg.norm(v_J)))


def _support_minimum(gram: np.ndarray, bottom: np.ndarray, step: float, support: Tuple[int, ...],
                     K: float, opts: ReOptions) -> Tuple[float, np.ndarray]:
    """Best (squared ratio, vector) for one support."""
    p = gram.shape[0]
    J = np.array(support)
    Jc = np.setdiff1d(np.arange(p), J)
    gen = rng.stream(opts.seed, 0, Stream.RE, len(support), *support)

    u = gen.standard_normal((opts.inits, J.size))
    z = gen.standard_normal((opts.inits, Jc.size))
    if np.linalg.norm(bottom[J]) > 1e-12:
        scale = np.linalg.norm(bottom[J])
        u = np.vstack([bottom[J] / scale, u])
        z = np.vstack([bottom[Jc] / scale, z])
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    z = project_l1_ball(z, K * np.abs(u).sum(axis=1))

    v = np.empty((u.shape[0], p))
    best_f = math.inf
    best_v = None
    stale = 0
    for _ in range(opts.iterations + 1):
        v[:, J] = u
        v[:, Jc] = z
        gv = v @ gram
        f = np.maximum(np.einsum("bp,bp->b", v, gv), 0.0)
        k = int(np.argmin(f))
        if f[k] < best_f - 1e-15:
            best_f, best_v, stale = float(f[k]), v[k].copy(), 0
        else:
            stale += 1
            if stale >= opts.patience:
                break
        grad = 2.0 * gv
        u_new = u - step * grad[:, J]
        norms = np.linalg.norm(u_new, axis=1, keepdims=True)
        u = np.where(norms > 0, u_new / np.where(norms > 0, norms, 1.0), u)
        z = project_l1_ball(z - step * grad[:, Jc], K * np.abs(u).sum(axis=1))
    return best_f, best_v


def _all_supports(p: int, s: int) -> List[Tuple[int, ...]]:
    return [J for size in range(1, s + 1) for J in itertools.combinations(range(p), size)]


def _random_supports(p: int, s: int, count: int, seed: int) -> List[Tuple[int, ...]]:
    if sum(math.comb(p, k) for k in range(1, s + 1)) <= count:
        return _all_supports(p, s)
    gen = rng.stream(seed, 0, Stream.RE)
    chosen = set()
    while len(chosen) < count:
        size = int(gen.integers(1, s + 1))
        chosen.add(tuple(sorted(int(j) for j in gen.choice(p, size, replace=False))))
    return sorted(chosen)


def restricted_eigenvalue(X, s: int, K: float, mode: ReMethod = ReMethod.EXACT_ENUMERATION,
                          opts: Optional[ReOptions] = None) -> ReResult:
    """
    Smallest cone-restricted ratio over supports of size at most s.

    Raises:
        DomainError: s outside 1..p or K <= 0.
        UnsupportedError: ExactEnumeration asked for p > 16 or s > 3.
    """
    opts = opts or ReOptions()
    mode = ReMethod(mode)
    values = as_array(X)
    N, p = values.shape
    if not 1 <= s <= p:
        raise DomainError(f"support size must lie in 1..{p}, got {s}")
    if not K > 0:
        raise DomainError(f"cone constant K must be positive, got {K}")
    if mode == ReMethod.EXACT_ENUMERATION:
        if p > EXACT_MAX_P or s > EXACT_MAX_S:
            raise UnsupportedError(
                f"exact enumeration needs p <= {EXACT_MAX_P} and s <= {EXACT_MAX_S}, got p={p}, s={s}")
        supports = _all_supports(p, s)
    else:
        logger.warning("restricted eigenvalue by heuristic search is an estimate, not a certificate")
        supports = _random_supports(p, s, opts.heuristic_supports, opts.seed)

    gram = values.T @ values / N
    lipschitz = 2.0 * spectral_norm_sq(values) / N
    step = 1.0 / lipschitz if lipschitz > 0 else 1.0
    bottom = np.linalg.eigh(gram)[1][:, 0]

    def solve(J):
        return _support_minimum(gram, bottom, step, J, K, opts)

    if opts.threads > 1:
        with ThreadPoolExecutor(max_workers=opts.threads) as pool:
            found = list(pool.map(solve, supports))
    else:
        found = [solve(J) for J in supports]

    best = None
    for J, (f, v) in zip(supports, found):
        logger.debug("support %s: squared ratio %.6g", J, f)
        if best is None or f < best[1] - TIE_TOL or (abs(f - best[1]) <= TIE_TOL and J < best[0]):
            best = (J, f, v)
    J, _, v = best
    return ReResult(
        kappa=ratio(values, v, J),
        argmin_support=J,
        argmin_vector=v,
        method=mode,
        s=s,
        K=float(K),
        supports_checked=len(supports),
    )


def re_condition_holds(X, theta_support_size: int, K: float,
                       opts: Optional[ReOptions] = None) -> Tuple[bool, float]:
    """
    Evaluate kappa(2 s0, K) and report whether it is positive.

    Supports too large for enumeration fall back to the heuristic search.
    """
    values = as_array(X)
    s = 2 * theta_support_size
    if not 1 <= s <= values.shape[1]:
        raise DomainError(f"need 1 <= 2 s0 <= p, got 2 s0 = {s} with p = {values.shape[1]}")
    mode = (ReMethod.EXACT_ENUMERATION if values.shape[1] <= EXACT_MAX_P and s <= EXACT_MAX_S
            else ReMethod.HEURISTIC_LOWER_SEARCH)
    result = restricted_eigenvalue(values, s, K, mode, opts)
    return result.kappa > KAPPA_FLOOR, result.kappa
