"""Special functions and Gauss quadrature rules.

Everything here is vectorised over numpy arrays. Integer orders only.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from math import factorial, pi, sqrt

import numpy as np
from scipy import special as _sp
from scipy.linalg import eigh_tridiagonal

__all__ = [
    "QuadratureKind",
    "QuadratureRule",
    "gauss_rule",
    "laguerre",
    "laguerre_table",
    "bessel_j",
    "bessel_i_entire",
    "erf",
    "erfc",
    "erfcx",
    "erf_bracket",
    "log_erf_bracket",
    "MAX_QUAD_ORDER",
    "HERMITE_MAX_ORDER",
    "IHAT_SERIES_RADIUS",
]

# Orders above these caps are refused. Legendre rules are fine to 512; past
# Hermite order 360 the outermost weights (~e^{-x^2}, x ~ sqrt(2q)) leave the
# normal double range and eventually underflow to zero.
MAX_QUAD_ORDER = 512
HERMITE_MAX_ORDER = 360

# |u| at or below which bessel_i_entire sums its Taylor series directly.
IHAT_SERIES_RADIUS = 16.0
_IHAT_SERIES_TERMS = 48


class QuadratureKind(str, Enum):
    HERMITE = "hermite"
    LEGENDRE = "legendre"


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes/weights for int e^{-s^2} g(s) ds (Hermite) or int_{-1}^{1} g (Legendre)."""

    nodes: np.ndarray
    weights: np.ndarray
    kind: QuadratureKind
    order: int

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    def integrate(self, values, axis=-1):
        return np.tensordot(values, self.weights, axes=([axis], [0]))

    def mapped(self, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
        """Legendre rule moved to [lo, hi]."""
        if self.kind is not QuadratureKind.LEGENDRE:
            raise ValueError("only Legendre rules can be mapped to an interval")
        half = 0.5 * (hi - lo)
        return lo + half * (self.nodes + 1.0), half * self.weights


def _hermite_functions(q: int, x: np.ndarray) -> np.ndarray:
    """Orthonormal Hermite functions psi_0..psi_q at x (bounded, no overflow)."""
    out = np.empty((q + 1,) + x.shape)
    out[0] = np.exp(-0.5 * x * x) / pi ** 0.25
    if q >= 1:
        out[1] = sqrt(2.0) * x * out[0]
    for k in range(1, q):
        out[k + 1] = sqrt(2.0 / (k + 1)) * x * out[k] - sqrt(k / (k + 1)) * out[k - 1]
    return out


def _hermite_rule(q: int):
    # Golub-Welsch: nodes are eigenvalues of the Jacobi matrix, polished by
    # Newton steps on psi_q; weights 1 / sum_k p_k(x)^2 formed from psi_k.
    k = np.arange(1, q)
    x = eigh_tridiagonal(np.zeros(q), np.sqrt(k / 2.0), eigvals_only=True)
    for _ in range(2):
        psi = _hermite_functions(q, x)
        x = x - psi[q] / (sqrt(2.0 * q) * psi[q - 1])
    psi = _hermite_functions(q - 1, x)
    w = np.exp(-x * x) / np.sum(psi * psi, axis=0)
    # exact symmetry
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    return x, w


@lru_cache(maxsize=64)
def gauss_rule(kind, order: int) -> QuadratureRule:
    kind = QuadratureKind(kind)
    order = int(order)
    if order < 1:
        raise ValueError("quadrature order must be >= 1")
    cap = HERMITE_MAX_ORDER if kind is QuadratureKind.HERMITE else MAX_QUAD_ORDER
    if order > cap:
        raise ValueError(f"{kind.value} quadrature order {order} exceeds cap {cap}")
    if kind is QuadratureKind.HERMITE:
        x, w = (np.zeros(1), np.full(1, sqrt(pi))) if order == 1 else _hermite_rule(order)
    else:
        x, w = np.polynomial.legendre.leggauss(order)
    return QuadratureRule(np.ascontiguousarray(x), np.ascontiguousarray(w), kind, order)


# ---------------------------------------------------------------------------
# Laguerre
# ---------------------------------------------------------------------------

def laguerre_table(nmax: int, alpha: int, x) -> np.ndarray:
    """L_k^{(alpha)}(x) for k = 0..nmax, stacked on a new trailing axis."""
    x = np.asarray(x)
    dtype = np.result_type(x.dtype, np.float64)
    out = np.empty(x.shape + (nmax + 1,), dtype=dtype)
    out[..., 0] = 1.0
    if nmax >= 1:
        out[..., 1] = 1.0 + alpha - x
    for k in range(1, nmax):
        out[..., k + 1] = ((2 * k + 1 + alpha - x) * out[..., k]
                           - (k + alpha) * out[..., k - 1]) / (k + 1)
    return out


def laguerre(degree: int, alpha: int, arg):
    """Generalised Laguerre polynomial L_degree^{(alpha)}(arg) by forward recurrence."""
    if degree < 0 or alpha < 0:
        raise ValueError("degree and alpha must be non-negative")
    arg = np.asarray(arg)
    dtype = np.result_type(arg.dtype, np.float64)
    prev = np.ones(arg.shape, dtype=dtype)
    if degree == 0:
        return prev[()] if prev.ndim == 0 else prev
    cur = 1.0 + alpha - arg
    for k in range(1, degree):
        prev, cur = cur, ((2 * k + 1 + alpha - arg) * cur - (k + alpha) * prev) / (k + 1)
    return cur[()] if np.ndim(cur) == 0 else cur


# ---------------------------------------------------------------------------
# Bessel
# ---------------------------------------------------------------------------

def bessel_j(order: int, x):
    """J_order(x) for integer order (cephes/AMOS via scipy)."""
    return _sp.jv(order, x)


def _ihat_series(order: int, u: np.ndarray) -> np.ndarray:
    term = np.full(u.shape, 1.0 / factorial(order), dtype=u.dtype)
    acc = term.copy()
    q = u / 4.0
    for k in range(1, _IHAT_SERIES_TERMS):
        term = term * q / (k * (k + order))
        acc += term
    return acc


def bessel_i_entire(order: int, u):
    """Entire function Ihat_nu(u) = sum_k (u/4)^k / (k! (k+nu)!).

    It satisfies I_nu(sqrt u) = (u/4)^{nu/2} Ihat_nu(u) for any branch of the
    square root, so complex arguments need no branch choice.
    """
    if order < 0:
        raise ValueError("order must be non-negative")
    u = np.asarray(u)
    is_complex = np.iscomplexobj(u)
    uc = u.astype(np.complex128) if is_complex else u.astype(np.float64)
    out = np.empty(uc.shape, dtype=uc.dtype)
    small = np.abs(uc) <= IHAT_SERIES_RADIUS
    if np.any(small):
        out[small] = _ihat_series(order, uc[small])
    big = ~small
    if np.any(big):
        r = np.sqrt(uc[big].astype(np.complex128))
        val = _sp.iv(order, r) / (0.5 * r) ** order
        out[big] = val if is_complex else val.real
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Error functions
# ---------------------------------------------------------------------------

erf = _sp.erf
erfc = _sp.erfc
erfcx = _sp.erfcx


# |u| (1 + beta) below which the bracket is integrated directly (8-point GL)
BRACKET_SMALL_U = 0.25
_BR_T, _BR_W = np.polynomial.legendre.leggauss(8)


def _bracket_small_log(au, beta):
    """log of (2/sqrt(pi)) int_{beta-u}^{beta+u} e^{-t^2} dt for small u > 0, plus beta^2."""
    t = au[..., None] * _BR_T
    s = np.sum(_BR_W * np.exp(-2.0 * beta * t - t * t), axis=-1)
    with np.errstate(divide="ignore"):
        return np.log(2.0 * au / sqrt(pi)) + np.log(s)


def erf_bracket(u, beta):
    """erf(u+beta) + erf(u-beta), beta >= 0, without cancellation.

    Odd in u. For u >= beta both erf terms sit near +1 and the sum is formed
    from complements; for u < beta it is a difference of complements, and for
    very small u a direct quadrature of the erf difference.
    """
    u = np.asarray(u, dtype=np.float64)
    beta = float(beta)
    au = np.abs(u)
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        hi = 2.0 - erfc(au + beta) - erfc(au - beta)
        lo = erfc(beta - au) - erfc(beta + au)
        tiny = np.exp(_bracket_small_log(au, beta) - beta * beta)
    val = np.where(au >= beta, hi, lo)
    val = np.where(au * (1.0 + beta) < BRACKET_SMALL_U, tiny, val)
    out = np.copysign(val, u) * (au != 0)
    return out[()] if out.ndim == 0 else out


def log_erf_bracket(u, beta):
    """(sign, log|erf(u+beta)+erf(u-beta)| + u^2) as arrays.

    The u^2 is folded in because the bracket always appears with a factor
    e^{u^2}; for u < beta the bracket alone can underflow.
    """
    u = np.asarray(u, dtype=np.float64)
    beta = float(beta)
    au = np.abs(u)
    sign = np.sign(u)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore", under="ignore"):
        # u < beta: erfc(b-u) - erfc(b+u) = e^{-(b-u)^2}[erfcx(b-u) - erfcx(b+u) e^{-4ub}]
        inner = erfcx(beta - au) - erfcx(beta + au) * np.exp(-4.0 * au * beta)
        lo = -beta * beta + 2.0 * au * beta + np.log(inner)
        hi = au * au + np.log(2.0 - erfc(au + beta) - erfc(au - beta))
        tiny = _bracket_small_log(au, beta) - beta * beta + au * au
    logmag = np.where(au >= beta, hi, lo)
    logmag = np.where(au * (1.0 + beta) < BRACKET_SMALL_U, tiny, logmag)
    logmag = np.where(au == 0, -np.inf, logmag)
    return sign, logmag
