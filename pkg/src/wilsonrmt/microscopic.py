"""Microscopic (weakly non-chiral) limit of the finite-n correlators.

Every I_nu(sqrt(u)) with complex u is routed through the entire function
Ihat_nu(u) from special_fn, so no square-root branch is ever chosen.
Notation: X_r = x_hat + 4 i a_hat r, u_X = m_hat^2 - X_r^2.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import exp, pi, sqrt

import numpy as np

from .kernels import KernelSet
from .sop import IMAG_RESIDUAL_TOL, MicroParams, QuadratureResidualError
from .special_fn import (QuadratureKind, bessel_i_entire, bessel_j, erf_bracket,
                         gauss_rule)

__all__ = [
    "limit_poly_even",
    "limit_poly_odd",
    "rho_s",
    "rho_s_nu1",
    "rho_s_nu1_zero_mode",
    "chgue_density_micro",
    "PartitionResult",
    "partition_nf1_micro",
    "ConvergenceReport",
    "micro_convergence_check",
    "MICRO_ORDER",
]

MICRO_ORDER = 64        # Gauss-Hermite order for the s, r and y integrals
MICRO_T_ORDER = 64      # Gauss-Legendre order for the t-integral
THETA_POINTS = 256      # trapezoid points for the theta form of Z
PARTITION_TOL = 1e-8


def _gh(order):
    r = gauss_rule(QuadratureKind.HERMITE, order)
    return r.nodes, r.weights


def _real(z, scale, what):
    z = np.asarray(z)
    if np.any(np.abs(z.imag) > IMAG_RESIDUAL_TOL * np.maximum(np.abs(scale), 1e-300)):
        raise QuadratureResidualError(f"{what}: imaginary residual too large")
    out = z.real
    return out[()] if out.ndim == 0 else out


def _bhat(v, mp: MicroParams):
    """erf((v + 2m)/(4 sqrt2 a)) + erf((v - 2m)/(4 sqrt2 a))."""
    c = 4.0 * sqrt(2.0) * mp.a_hat
    return erf_bracket(np.asarray(v) / c, 2.0 * mp.m_hat / c)


# ---------------------------------------------------------------------------
# limiting polynomials
# ---------------------------------------------------------------------------

def _limit_poly(t, x_hat, mp, odd, order):
    s, ws = _gh(order)
    t = np.asarray(t, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    t, x_hat = np.broadcast_arrays(t, x_hat)
    X = x_hat[..., None] + 4j * mp.a_hat * s
    val = bessel_i_entire(0, t[..., None] * (mp.m_hat ** 2 - X * X))
    if odd:
        val = val * X
    avg = val @ ws / sqrt(pi)
    scale = np.abs(val) @ ws / sqrt(pi)
    return np.exp(-2.0 * t * mp.a_hat ** 2) * _real(avg, scale, "limiting polynomial")


def limit_poly_even(t, x_hat, mp: MicroParams, order: int = MICRO_ORDER):
    """Large-n limit of (-1)^j R_2j(x) / (2^j j!) at j = t n."""
    return _limit_poly(t, x_hat, mp, False, order)


def limit_poly_odd(t, x_hat, mp: MicroParams, order: int = MICRO_ORDER):
    """Large-n limit of sqrt(2n) (-1)^j R_2j+1(x) / (2^j j!) at j = t n."""
    return _limit_poly(t, x_hat, mp, True, order)


# ---------------------------------------------------------------------------
# microscopic densities
# ---------------------------------------------------------------------------

def _rho_s_cd_point(xh, mp, order):
    ah, mh = mp.a_hat, mp.m_hat
    s, ws = _gh(order)
    yh = -xh + sqrt(32.0) * ah * s
    B = _bhat(yh - xh, mp)
    X = xh + 4j * ah * s
    Y = yh[:, None] + 4j * ah * s
    uX, uY = mh * mh - X * X, mh * mh - Y * Y
    hX, i0X = 0.5 * uX * bessel_i_entire(1, uX), bessel_i_entire(0, uX)
    hY, i0Y = 0.5 * uY * bessel_i_entire(1, uY), bessel_i_entire(0, uY)
    num = hX[None, None, :] * i0Y[:, :, None] - hY[:, :, None] * i0X[None, None, :]
    den = X[None, None, :] + Y[:, :, None]
    tiny = np.abs(den) < 1e-13
    # v = -u is a removable point; with even orders it only occurs at x_hat = y_hat = 0
    ratio = np.where(tiny, 0.0, num / np.where(tiny, 1.0, den))
    inner = np.einsum("s,r,ysr->y", ws, ws, ratio) / pi
    val = np.sum(ws * B * inner) / (4.0 * sqrt(pi))
    return _real(val, np.sum(ws * np.abs(B * inner)) / (4.0 * sqrt(pi)), "rho_s")


def _rho_s_t_point(xh, mp, order, t_order):
    ah, mh = mp.a_hat, mp.m_hat
    s, ws = _gh(order)
    tl, wl = np.polynomial.legendre.leggauss(t_order)
    tt, wl = 0.5 * (tl + 1.0), 0.5 * wl
    yh = -xh + sqrt(32.0) * ah * s
    B = _bhat(xh - yh, mp)
    X = xh + 4j * ah * s
    Y = yh[:, None] + 4j * ah * s
    IX = bessel_i_entire(0, tt[:, None] * (mh * mh - X * X)[None, :])
    IY = bessel_i_entire(0, tt[None, None, :] * (mh * mh - Y * Y)[:, :, None])
    A = np.einsum("t,yst,tr->ysr", wl, IY, IX)
    fac = X[None, None, :] - Y[:, :, None]
    inner = np.einsum("s,r,ysr->y", ws, ws, fac * A) / pi
    c = sqrt(32.0) / (32.0 * sqrt(2.0 * pi))
    val = c * np.sum(ws * B * inner)
    return _real(val, c * np.sum(ws * np.abs(B * inner)), "rho_s (t form)")


def rho_s(x_hat, mp: MicroParams, form: str = "cd", order: int = MICRO_ORDER,
          t_order: int = MICRO_T_ORDER):
    """Quenched nu=0 microscopic density.

    form="cd" uses the Christoffel-Darboux (Bessel-difference) representation,
    form="t" the integral over the polynomial-index variable t in [0, 1].
    """
    if mp.a_hat <= 0:
        raise ValueError("rho_s needs a_hat > 0; use chgue_density_micro at a_hat = 0")
    xs = np.asarray(x_hat, dtype=np.float64)
    if form == "cd":
        vals = [_rho_s_cd_point(float(x), mp, order) for x in xs.ravel()]
    elif form == "t":
        vals = [_rho_s_t_point(float(x), mp, order, t_order) for x in xs.ravel()]
    else:
        raise ValueError("form must be 'cd' or 't'")
    out = np.asarray(vals, dtype=np.float64).reshape(xs.shape)
    return out[()] if out.ndim == 0 else out


def _a0(xh, mp, order):
    """int ds e^{-s^2} I_0(sqrt(u_X))."""
    s, ws = _gh(order)
    X = np.asarray(xh, dtype=np.float64)[..., None] + 4j * mp.a_hat * s
    return bessel_i_entire(0, mp.m_hat ** 2 - X * X) @ ws


def _a1(xh, mp, order):
    """int dr e^{-r^2} (m + X_r) I_1(sqrt(u_X)) / sqrt(u_X)."""
    s, ws = _gh(order)
    X = np.asarray(xh, dtype=np.float64)[..., None] + 4j * mp.a_hat * s
    return (0.5 * (mp.m_hat + X) * bessel_i_entire(1, mp.m_hat ** 2 - X * X)) @ ws


def rho_s_nu1_zero_mode(x_hat, mp: MicroParams, order: int = MICRO_ORDER):
    """Gaussian zero-mode term of the nu=1 density (unit mass as a_hat -> 0)."""
    xh = np.asarray(x_hat, dtype=np.float64)
    val = np.exp(-(xh + mp.m_hat) ** 2 / (16.0 * mp.a_hat ** 2)) / (4 * pi * mp.a_hat) * _a0(xh, mp, order)
    return _real(val, np.abs(val), "zero mode")


def rho_s_nu1(x_hat, mp: MicroParams, order: int = MICRO_ORDER):
    """Quenched nu=1 microscopic density: rho_s + bracket correction + zero-mode term."""
    if mp.a_hat <= 0:
        raise ValueError("rho_s_nu1 needs a_hat > 0")
    ah = mp.a_hat
    s, ws = _gh(order)
    xs = np.atleast_1d(np.asarray(x_hat, dtype=np.float64))
    base = np.atleast_1d(rho_s(xs, mp, order=order))
    corr = np.empty_like(xs)
    for i, xh in enumerate(xs):
        zh = -xh + sqrt(32.0) * ah * s
        B = _bhat(xh - zh, mp)
        brace = _a0(xh, mp, order) * _a1(zh, mp, order) - _a0(zh, mp, order) * _a1(xh, mp, order)
        # e^{-(x+z)^2/32a^2} dz = sqrt(32) a e^{-s^2} ds
        val = sqrt(32.0) * ah * np.sum(ws * B * brace) / (16.0 * ah * pi * sqrt(2 * pi))
        corr[i] = _real(val, sqrt(32.0) * np.sum(ws * np.abs(B * brace)) / (16 * pi * sqrt(2 * pi)),
                        "rho_s_nu1 correction")
    out = (base + corr + np.atleast_1d(rho_s_nu1_zero_mode(xs, mp, order))).reshape(np.shape(x_hat))
    return out[()] if out.ndim == 0 else out


def chgue_density_micro(x_hat, nu: int):
    """Microscopic chGUE density in x_hat (nu in {0, 1})."""
    x = np.asarray(x_hat, dtype=np.float64)
    ax = np.abs(x)
    if nu == 0:
        out = 0.5 * ax * (bessel_j(0, ax) ** 2 + bessel_j(1, ax) ** 2)
    elif nu == 1:
        out = 0.5 * ax * (bessel_j(1, ax) ** 2 - bessel_j(0, ax) * bessel_j(2, ax))
    else:
        raise ValueError("nu must be 0 or 1")
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# N_f = 1 partition function
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PartitionResult:
    theta_form: float
    hermite_form: float
    rel_discrepancy: float

    @property
    def ok(self) -> bool:
        return self.rel_discrepancy <= PARTITION_TOL


def partition_nf1_micro(mp: MicroParams, theta_points: int = THETA_POINTS,
                        order: int = 2 * MICRO_ORDER, check: bool = False) -> PartitionResult:
    """Microscopic one-flavour partition function in two representations."""
    mh, zh, ah, nu = mp.m_hat, mp.z_hat, mp.a_hat, mp.nu
    th = 2.0 * pi * np.arange(theta_points) / theta_points
    sn = np.sin(th)
    integrand = np.exp(1j * nu * th + mh * np.cos(th) + 1j * zh * sn + 4.0 * ah * ah * sn * sn)
    z_theta = exp(-2.0 * ah * ah) * float(np.mean(integrand).real)

    s, ws = _gh(order)
    w = zh + 4j * ah * s
    vals = (0.5 * (mh - w)) ** nu * bessel_i_entire(nu, mh * mh - w * w)
    z_herm = exp(-2.0 * ah * ah) * _real(vals @ ws / sqrt(pi), np.abs(vals) @ ws / sqrt(pi),
                                         "partition function")
    # relative to the integrand scale, so exact zeros (m = z = 0, nu odd) compare cleanly
    den = max(abs(z_theta), abs(z_herm), exp(-2.0 * ah * ah) * float(np.mean(np.abs(integrand))))
    res = PartitionResult(z_theta, float(z_herm), abs(z_theta - z_herm) / den)
    if check and not res.ok:
        raise QuadratureResidualError(f"partition forms disagree: {res.rel_discrepancy:.3e}")
    return res


# ---------------------------------------------------------------------------
# finite-n convergence
# ---------------------------------------------------------------------------

@dataclass
class ConvergenceReport:
    micro: MicroParams
    grid: np.ndarray
    ns: list
    distances: list
    limit_values: np.ndarray = field(repr=False)
    finite_values: list = field(repr=False)
    noise: float = 1e-6

    @property
    def monotone(self) -> bool:
        d = self.distances
        return all(d[i + 1] <= d[i] + self.noise for i in range(len(d) - 1))


def micro_convergence_check(mp: MicroParams, ns=(8, 16, 32), grid=None,
                            noise: float = 1e-6) -> ConvergenceReport:
    """Sup-norm distance of (1/sqrt(2n)) rho_1(x_hat/sqrt(2n)) to the limit density."""
    if grid is None:
        grid = np.linspace(-6.0, 6.0, 49)
    grid = np.asarray(grid, dtype=np.float64)
    limit = rho_s(grid, mp) if mp.nu == 0 else rho_s_nu1(grid, mp)
    limit = np.atleast_1d(limit)
    dists, finite = [], []
    for n in ns:
        p = mp.finite(n)
        sc = sqrt(2.0 * n)
        vals = np.atleast_1d(KernelSet(p).rho1(grid / sc)) / sc
        finite.append(vals)
        dists.append(float(np.max(np.abs(vals - limit))))
    return ConvergenceReport(mp, grid, list(ns), dists, limit, finite, noise)
