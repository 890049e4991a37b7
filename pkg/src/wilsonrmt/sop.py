"""Skew-orthogonal polynomials of the two-matrix model and related averages.

The even/odd polynomials are Gaussian averages of Laguerre polynomials,

    R_2j(x)   = c_j P_j(x),   P_j(x) = pi^{-1/2} int ds e^{-s^2} L_j(X(x+2ias))
    R_2j+1(x) = c_j Q_j(x),   Q_j(x) = pi^{-1/2} int ds e^{-s^2} (x+2ias) L_j(X(x+2ias))

with X(u) = (u^2 - m^2) / (2(1-a^2)) and c_j = (-1)^j j! 2^j (1-a^2)^j.
P_j and Q_j are O(1) for moderate x, so the kernels are assembled from them and
the large constants c_j are carried in log form.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import lgamma, log, pi, sqrt

import numpy as np

from .special_fn import QuadratureKind, gauss_rule, laguerre_table

__all__ = [
    "ModelParams",
    "MicroParams",
    "QuadratureResidualError",
    "DEGREE_CAP",
    "DEFAULT_HERMITE_ORDER",
    "DEFAULT_LEGENDRE_ORDER",
    "laguerre_argument",
    "pq_features",
    "log_c",
    "r_even",
    "r_odd",
    "norm_r",
    "log_norm_r",
    "coeff_s",
    "r_nu1",
    "char_poly_avg",
    "log_kernel_constant",
]

DEGREE_CAP = 64
DEFAULT_HERMITE_ORDER = 128
DEFAULT_LEGENDRE_ORDER = 64

# Imaginary parts of the s-averages must cancel to this fraction of the
# integrand's absolute scale.
IMAG_RESIDUAL_TOL = 1e-9


class QuadratureResidualError(ArithmeticError):
    """An average that must be real kept an imaginary part: quadrature too coarse."""


@dataclass(frozen=True)
class ModelParams:
    n: int
    nu: int
    a: float
    m: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if int(self.nu) != self.nu or self.nu < 0:
            raise ValueError(f"nu must be a non-negative integer, got {self.nu}")
        if not 0.0 < self.a < 1.0:
            raise ValueError(f"a must lie strictly inside (0, 1), got {self.a}")
        if not self.m >= 0.0:
            raise ValueError(f"m must be >= 0, got {self.m}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "nu", int(self.nu))
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "m", float(self.m))

    @property
    def N(self) -> int:
        return 2 * self.n + self.nu

    def as_dict(self) -> dict:
        return {"n": self.n, "nu": self.nu, "a": self.a, "m": self.m}


@dataclass(frozen=True)
class MicroParams:
    """Microscopic parameters.

    Relation to Wilson chiral perturbation theory in the epsilon regime:
    m_hat = m_q Sigma V and a_hat^2 = a_lat^2 V W8, with Sigma the chiral
    condensate, V the volume and W8 the low-energy constant of the a^2 term.
    Finite-n parameters follow from ``finite(n)``:
    m = m_hat / sqrt(2n), a = 2 a_hat / sqrt(2n), x = x_hat / sqrt(2n).
    """

    m_hat: float
    a_hat: float
    z_hat: float = 0.0
    nu: int = 0

    def __post_init__(self):
        if not self.m_hat >= 0.0:
            raise ValueError("m_hat must be >= 0")
        if not self.a_hat >= 0.0:
            raise ValueError("a_hat must be >= 0")
        if int(self.nu) != self.nu or self.nu < 0:
            raise ValueError("nu must be a non-negative integer")
        object.__setattr__(self, "nu", int(self.nu))

    def finite(self, n: int) -> ModelParams:
        s = sqrt(2.0 * n)
        return ModelParams(n=n, nu=self.nu, a=2.0 * self.a_hat / s, m=self.m_hat / s)

    def as_dict(self) -> dict:
        return {"m_hat": self.m_hat, "a_hat": self.a_hat, "z_hat": self.z_hat, "nu": self.nu}


def laguerre_argument(u, p: ModelParams):
    return (u * u - p.m * p.m) / (2.0 * (1.0 - p.a * p.a))


def _check_real(z: np.ndarray, scale: np.ndarray, what: str) -> np.ndarray:
    bad = np.abs(z.imag) > IMAG_RESIDUAL_TOL * np.maximum(scale, 1e-300)
    if np.any(bad):
        worst = float(np.max(np.abs(z.imag) / np.maximum(scale, 1e-300)))
        raise QuadratureResidualError(
            f"{what}: imaginary residual {worst:.3e} of integrand scale exceeds {IMAG_RESIDUAL_TOL}")
    return z.real


_PQ_CHUNK = 2_000_000   # complex Laguerre entries per block


def pq_features(x, p: ModelParams, jmax: int, order: int = DEFAULT_HERMITE_ORDER,
                check: bool = True):
    """Return (P, Q) with shapes x.shape + (jmax+1,), P[..., j] = P_j(x)."""
    if jmax > DEGREE_CAP:
        raise ValueError(f"degree {jmax} exceeds cap {DEGREE_CAP}")
    rule = gauss_rule(QuadratureKind.HERMITE, order)
    x = np.asarray(x, dtype=np.float64)
    flat = x.ravel()
    P = np.empty((flat.size, jmax + 1))
    Q = np.empty((flat.size, jmax + 1))
    w = rule.weights / sqrt(pi)
    step = max(1, _PQ_CHUNK // (order * (jmax + 1)))
    for lo in range(0, flat.size, step):
        u = flat[lo:lo + step, None] + 2j * p.a * rule.nodes
        L = laguerre_table(jmax, 0, laguerre_argument(u, p))
        Pc = np.einsum("xkj,k->xj", L, w)
        Qc = np.einsum("xkj,k->xj", L * u[..., None], w)
        if check:
            absL = np.abs(L)
            Pc = _check_real(Pc, np.einsum("xkj,k->xj", absL, w), "P_j average")
            Qc = _check_real(Qc, np.einsum("xkj,k->xj", absL * np.abs(u)[..., None], w),
                             "Q_j average")
        P[lo:lo + step] = Pc.real
        Q[lo:lo + step] = Qc.real
    shp = x.shape + (jmax + 1,)
    return P.reshape(shp), Q.reshape(shp)


def log_c(j: int, p: ModelParams) -> tuple[float, float]:
    """(sign, log|c_j|) for c_j = (-1)^j j! 2^j (1-a^2)^j."""
    return (-1.0) ** j, lgamma(j + 1) + j * log(2.0 * (1.0 - p.a * p.a))


def _scalarize(v):
    return v[()] if np.ndim(v) == 0 else v


def r_even(j: int, x, p: ModelParams, order: int = DEFAULT_HERMITE_ORDER):
    """Monic R_2j(x)."""
    P, _ = pq_features(x, p, j, order)
    sg, lc = log_c(j, p)
    return _scalarize(sg * np.exp(lc) * P[..., j])


def r_odd(j: int, x, p: ModelParams, order: int = DEFAULT_HERMITE_ORDER):
    """Monic R_2j+1(x) = -2a^2 w(x)^{-1} d/dx [w(x) R_2j(x)]."""
    _, Q = pq_features(x, p, j, order)
    sg, lc = log_c(j, p)
    return _scalarize(sg * np.exp(lc) * Q[..., j])


def log_norm_r(j: int, p: ModelParams) -> float:
    a2 = p.a * p.a
    return (log(8.0) + 0.5 * log(2 * pi * a2) + (2 * j + 0.5) * log(1.0 - a2)
            + 2 * j * log(2.0) + 2 * lgamma(j + 1) - p.m ** 2 / (2.0 * (1.0 - a2)))


def norm_r(j: int, p: ModelParams) -> float:
    """Skew norm r_j = <R_2j, R_2j+1>."""
    return float(np.exp(log_norm_r(j, p)))


def log_kernel_constant(p: ModelParams) -> float:
    """log of c_j^2 / r_j, which does not depend on j."""
    a2 = p.a * p.a
    return p.m ** 2 / (2.0 * (1.0 - a2)) - log(8.0) - 0.5 * log(2 * pi * a2 * (1.0 - a2))


def coeff_s(j: int, p: ModelParams) -> tuple[float, float]:
    """(sign, log|s_j|) with s_j = int dx w(x) f(x) R_j(x).

    s_2i = c_i 2 sqrt(pi) a e^{m^2/4a^2}, s_2i+1 = -m s_2i. For m = 0 the odd
    coefficients vanish and (0, -inf) is returned.
    """
    i = j // 2
    sg, lc = log_c(i, p)
    lg = lc + log(2.0 * sqrt(pi) * p.a) + p.m ** 2 / (4.0 * p.a ** 2)
    if j % 2 == 0:
        return sg, lg
    if p.m == 0.0:
        return 0.0, -np.inf
    return -sg, lg + log(p.m)


def r_nu1(j: int, x, p: ModelParams, order: int = DEFAULT_HERMITE_ORDER):
    """R_j^{nu=1} = R_j - (s_j / s_{N-1}) R_{N-1}, with N - 1 = 2n."""
    if p.nu != 1:
        raise ValueError("r_nu1 requires nu = 1")
    top = 2 * p.n
    if not 0 <= j <= top:
        raise ValueError(f"j must lie in [0, {top}]")
    i = j // 2
    P, Q = pq_features(x, p, p.n, order)
    sg, lc = log_c(i, p)
    if j == top:
        val = P[..., p.n]
    elif j % 2 == 0:
        val = P[..., i] - P[..., p.n]
    else:
        val = Q[..., i] + p.m * P[..., p.n]
    # rescale by c_i; the c_i / c_n ratio is absorbed exactly above
    return _scalarize(sg * np.exp(lc) * val)


def char_poly_avg(z, p: ModelParams, order: int = DEFAULT_HERMITE_ORDER):
    """<det(z + D5)> over the ensemble, any nu >= 0."""
    n, nu = p.n, p.nu
    if n > DEGREE_CAP:
        raise ValueError(f"degree {n} exceeds cap {DEGREE_CAP}")
    rule = gauss_rule(QuadratureKind.HERMITE, order)
    z = np.asarray(z, dtype=np.float64)
    u = z[..., None] + 2j * p.a * rule.nodes
    L = laguerre_table(n, nu, laguerre_argument(u, p))[..., n]
    integrand = (u - p.m) ** nu * L
    w = rule.weights / sqrt(pi)
    avg = _check_real(integrand @ w, np.abs(integrand) @ w, "characteristic polynomial")
    sg, lc = log_c(n, p)
    return _scalarize(sg * np.exp(lc) * avg)
