"""Weights, correlation kernels and finite-n spectral correlators.

Raw kernels carry Gaussian factors that overflow quickly (F(x) grows like
e^{x^2(1-a^2)/8a^2}). Internally every kernel is evaluated in a gauge

    D^(x,y) = D(x,y) e^{ G(x)+G(y)},   S^(x,y) = S(x,y) e^{-G(x)+G(y)},
    I^(x,y) = I(x,y) e^{-G(x)-G(y)},   G(x) = (1-a^2) x^2 / (4a^2 (1+a^2)),

in which all three are O(1). The gauge is a congruence diag(e^{-G}, e^{G})
of every 2x2 block of the Pfaffian matrix, so correlators are unchanged and
rho_1(x) = S^(x, x).

The z-integrals int dz F(x-z) w(z) g(z) are done by Gauss-Hermite after
completing the square:
    F(x-z) w(z) = e^{G(x)} e^{-(z-z0)^2 (1+a^2)/8a^2} B(x-z),
with z0 = -x(1-a^2)/(1+a^2) and B the erf bracket of F.
"""
from __future__ import annotations

from enum import Enum
from math import lgamma, log, pi, sqrt

import numpy as np

from .pfaffian import pfaffian
from .sop import (DEFAULT_HERMITE_ORDER, ModelParams, laguerre_argument,
                  log_kernel_constant, pq_features)
from .special_fn import QuadratureKind, erf_bracket, gauss_rule, laguerre_table, log_erf_bracket

__all__ = [
    "KernelPath",
    "KernelSet",
    "weight_w",
    "weight_f",
    "weight_F",
    "kernel_D",
    "kernel_S",
    "kernel_I",
    "kernels_nu1",
    "rho1",
    "rho2",
    "rho_k",
    "chgue_density_finite",
    "shift_map",
]

# Cap on the number of complex Laguerre-table entries built per chunk.
_CHUNK_ELEMENTS = 4_000_000


class KernelPath(str, Enum):
    SUM = "sum"  # sums over skew-orthogonal polynomials
    CD = "cd"    # Christoffel-Darboux double integral plus z-transforms


# ---------------------------------------------------------------------------
# weights, all as (sign, log|.|)
# ---------------------------------------------------------------------------

def weight_w(x, p: ModelParams):
    x = np.asarray(x, dtype=np.float64)
    return np.ones_like(x), -x * x / (4.0 * p.a ** 2)


def weight_f(x, p: ModelParams):
    x = np.asarray(x, dtype=np.float64)
    return np.ones_like(x), -p.m * x / (2.0 * p.a ** 2)


def _alpha_beta(p: ModelParams):
    a2 = p.a * p.a
    return sqrt(1.0 - a2) / sqrt(8.0 * a2), p.m / sqrt(2.0 * a2 * (1.0 - a2))


def weight_F(x, p: ModelParams):
    """Antisymmetric weight F(x) = e^{x^2(1-a^2)/8a^2} [erf(alpha x + beta) + erf(alpha x - beta)]."""
    al, be = _alpha_beta(p)
    return log_erf_bracket(al * np.asarray(x, dtype=np.float64), be)


def _G(x, p: ModelParams):
    a2 = p.a * p.a
    return (1.0 - a2) * x * x / (4.0 * a2 * (1.0 + a2))


def _log_ghat(x, p: ModelParams):
    return -x * x / (2.0 * (1.0 + p.a * p.a))


def _F_gauged(x, y, p: ModelParams):
    """F(x-y) e^{-G(x)-G(y)}."""
    sg, lf = weight_F(x - y, p)
    with np.errstate(invalid="ignore"):
        return np.where(sg == 0, 0.0, sg * np.exp(lf - _G(x, p) - _G(y, p)))


def _log_h(x, p: ModelParams):
    """log of f(x) e^{-m^2/4a^2 - G(x)} / (2 sqrt(pi) a): the nu=1 zero-mode piece."""
    a2 = p.a * p.a
    return (-p.m * x / (2 * a2) - p.m ** 2 / (4 * a2) - _G(x, p)
            - log(2.0 * sqrt(pi) * p.a))


# ---------------------------------------------------------------------------
# kernel set
# ---------------------------------------------------------------------------

class KernelSet:
    """Kernels S, D, I at fixed parameters (nu in {0, 1}).

    path: KernelPath.SUM (default) or KernelPath.CD. The CD path is an
    independent, slower route used for cross-checks.
    """

    def __init__(self, p: ModelParams, path=KernelPath.SUM,
                 s_order: int = DEFAULT_HERMITE_ORDER, z_order: int = DEFAULT_HERMITE_ORDER,
                 cd_order: int = 64):
        if p.nu not in (0, 1):
            raise ValueError("kernels exist for nu = 0 and nu = 1 only")
        self.params = p
        self.path = KernelPath(path)
        self.s_order = s_order
        self.z_order = z_order
        self.cd_order = cd_order
        self._K = np.exp(log_kernel_constant(p))
        a2 = p.a * p.a
        self._sig_z = sqrt(8.0 * a2 / (1.0 + a2))
        self._zshift = -(1.0 - a2) / (1.0 + a2)
        self._alpha, self._beta = _alpha_beta(p)

    # -- z-quadrature -------------------------------------------------------
    def _z_nodes(self, x):
        """Nodes z_t(x) and weights for int dz F(x-z) w(z) g(z) = e^{G(x)} sum_t W_t(x) g(z_t)."""
        rule = gauss_rule(QuadratureKind.HERMITE, self.z_order)
        x = np.asarray(x, dtype=np.float64)
        z = (self._zshift * x)[..., None] + self._sig_z * rule.nodes
        b = erf_bracket(self._alpha * (x[..., None] - z), self._beta)
        return z, self._sig_z * rule.weights * b

    # -- features for the SUM path ---------------------------------------------
    def features(self, x):
        """(P, Q, PhiP, PhiQ, log ghat, log h) at the points x; trailing axis j = 0..n."""
        p = self.params
        x = np.asarray(x, dtype=np.float64)
        flat = x.ravel()
        n = p.n
        per_point = self.s_order * self.z_order * (n + 1)
        step = max(1, _CHUNK_ELEMENTS // per_point)
        P, Q = pq_features(flat, p, n, self.s_order)
        FP = np.empty_like(P)
        FQ = np.empty_like(Q)
        for i in range(0, flat.size, step):
            xs = flat[i:i + step]
            z, wt = self._z_nodes(xs)
            Pz, Qz = pq_features(z, p, n, self.s_order)
            FP[i:i + step] = np.einsum("xt,xtj->xj", wt, Pz)
            FQ[i:i + step] = np.einsum("xt,xtj->xj", wt, Qz)
        shp = x.shape + (n + 1,)
        return (P.reshape(shp), Q.reshape(shp), FP.reshape(shp), FQ.reshape(shp),
                _log_ghat(x, p), _log_h(x, p))

    def _modified(self, P, Q, FP, FQ):
        """Features of the nu=1 polynomials R^{nu=1}_j, j < 2n (scaled by 1/c_j)."""
        n, m = self.params.n, self.params.m
        top, ftop = P[..., n:n + 1], FP[..., n:n + 1]
        return (P[..., :n] - top, Q[..., :n] + m * top,
                FP[..., :n] - ftop, FQ[..., :n] + m * ftop)

    def _sum_parts(self, fx, fy):
        P1, Q1, FP1, FQ1, lgx, lhx = fx
        P2, Q2, FP2, FQ2, lgy, lhy = fy
        n = self.params.n
        if self.params.nu == 1:
            top = (P1[..., n], P2[..., n], FP1[..., n], FP2[..., n])
            P1, Q1, FP1, FQ1 = self._modified(P1, Q1, FP1, FQ1)
            P2, Q2, FP2, FQ2 = self._modified(P2, Q2, FP2, FQ2)
        else:
            P1, Q1, FP1, FQ1 = P1[..., :n], Q1[..., :n], FP1[..., :n], FQ1[..., :n]
            P2, Q2, FP2, FQ2 = P2[..., :n], Q2[..., :n], FP2[..., :n], FQ2[..., :n]
        K = self._K
        gx, gy = np.exp(lgx), np.exp(lgy)
        D = K * gx * gy * np.sum(P1 * Q2 - Q1 * P2, axis=-1)
        S = K * gy * np.sum(FP1 * Q2 - FQ1 * P2, axis=-1)
        I = -K * np.sum(FP1 * FQ2 - FQ1 * FP2, axis=-1)
        if self.params.nu == 1:
            Pn_x, Pn_y, FPn_x, FPn_y = top
            hx, hy = np.exp(lhx), np.exp(lhy)
            S = S + hx * gy * Pn_y
            I = I + FPn_x * hy - FPn_y * hx
        return D, S, I

    # -- CD path ----------------------------------------------------------------
    def _d_cd(self, x, y):
        """D(x,y) / (w(x) w(y)) from the Christoffel-Darboux double integral (plus nu=1 correction)."""
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        # each point carries a cd_order^2 matrix; chunk the flattened batch
        step = max(1, _CHUNK_ELEMENTS // (self.cd_order * self.cd_order))
        if x.size <= step:
            return self._d_cd_block(x, y)
        xf, yf = x.ravel(), y.ravel()
        out = np.empty(xf.size)
        for i in range(0, xf.size, step):
            out[i:i + step] = self._d_cd_block(xf[i:i + step], yf[i:i + step])
        return out.reshape(x.shape)

    def _d_cd_block(self, x, y):
        p = self.params
        n, a = p.n, p.a
        rule = gauss_rule(QuadratureKind.HERMITE, self.cd_order)
        s, ws = rule.nodes, rule.weights
        u = x[..., None] + 2j * a * s   # r-index
        v = y[..., None] + 2j * a * s                                  # s-index
        c = 2.0 * (1.0 - a * a)
        Lx = laguerre_table(n, 0, laguerre_argument(u, p))
        Ly = laguerre_table(n, 0, laguerre_argument(v, p))
        Xn, Xn1 = Lx[..., n][..., None, :], Lx[..., n - 1][..., None, :]
        Yn, Yn1 = Ly[..., n][..., :, None], Ly[..., n - 1][..., :, None]
        den = v[..., :, None] + u[..., None, :]
        num = Xn * Yn1 - Xn1 * Yn
        # removable singularity at v = -u: N/(u+v) -> -(2u/c)(L_n L'_{n-1} - L_{n-1} L'_n)
        L1x = laguerre_table(n - 1, 1, laguerre_argument(u, p))
        dn = -L1x[..., n - 1]
        dn1 = -L1x[..., n - 2] if n >= 2 else np.zeros_like(dn)
        lim = (-(2.0 * u / c) * (Lx[..., n] * dn1 - Lx[..., n - 1] * dn))[..., None, :]
        lim = np.broadcast_to(lim, den.shape)
        tiny = np.abs(den) < 1e-12 * (1.0 + np.abs(u[..., None, :]))
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(tiny, lim, num / np.where(tiny, 1.0, den))
        tot = np.einsum("...sr,s,r->...", ratio, ws, ws)
        pref = np.exp(p.m ** 2 / c) * n * sqrt(1.0 - a * a) / (4.0 * pi * sqrt(2.0 * pi * a * a))
        d = pref * tot
        if p.nu == 1:
            Lnx = Lx[..., n] @ ws
            Lny = Ly[..., n] @ ws
            Ax = ((u + p.m) * L1x[..., n - 1]) @ ws
            L1y = laguerre_table(n - 1, 1, laguerre_argument(v, p))[..., n - 1]
            Ay = ((v + p.m) * L1y) @ ws
            pref1 = np.exp(p.m ** 2 / c) / (8.0 * a * pi * sqrt(2.0 * pi * (1.0 - a * a)))
            d = d + pref1 * (Lny * Ax - Lnx * Ay)
        return d.real

    def _s_hat_cd(self, x, y):
        """S^(x,y) / ghat(y) by z-quadrature of the CD polynomial part."""
        p = self.params
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        z, wt = self._z_nodes(x)
        d = self._d_cd(z, y[..., None])
        out = np.sum(wt * d, axis=-1)
        if p.nu == 1:
            rule = gauss_rule(QuadratureKind.HERMITE, self.cd_order)
            v = y[..., None] + 2j * p.a * rule.nodes
            Ln = (laguerre_table(p.n, 0, laguerre_argument(v, p))[..., p.n] @ rule.weights).real
            a2 = p.a * p.a
            # separable zero-mode piece, divided by ghat(y) and gauged by e^{-G(x)}
            lsep = -(2 * x * p.m + p.m ** 2) / (4 * a2) - _G(x, p)
            out = out + np.exp(lsep) * Ln / (2.0 * pi * p.a)
        return out

    def _cd_parts(self, x, y):
        p = self.params
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        gx, gy = np.exp(_log_ghat(x, p)), np.exp(_log_ghat(y, p))
        D = gx * gy * self._d_cd(x, y)
        S = gy * self._s_hat_cd(x, y)
        z, wt = self._z_nodes(y)
        I = -np.sum(wt * self._s_hat_cd(x[..., None], z), axis=-1)
        if p.nu == 1:
            # term phi_{N-1}(x) f(y)/s_{N-1}, absent from the z-relation for I
            fx = self.features(x)
            I = I + fx[2][..., p.n] * np.exp(_log_h(y, p))
        return D, S, I

    # -- public, gauged ------------------------------------------------------------
    def gauged(self, x, y):
        """(D^, S^, I^) at broadcast points, I^ including the -F term."""
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if self.path is KernelPath.SUM:
            # features once per input array; the pair sums broadcast
            D, S, I = self._sum_parts(self.features(x), self.features(y))
        else:
            D, S, I = self._cd_parts(x, y)
        return D, S, I - _F_gauged(x, y, self.params)

    def log_gauge(self, x):
        return _G(np.asarray(x, dtype=np.float64), self.params)

    # -- public, raw ------------------------------------------------------------
    def triple(self, x, y):
        """Raw (S, D, I); may overflow for |x|, |y| >> a."""
        D, S, I = self.gauged(x, y)
        gx, gy = self.log_gauge(x), self.log_gauge(y)
        with np.errstate(over="ignore"):
            return S * np.exp(gx - gy), D * np.exp(-gx - gy), I * np.exp(gx + gy)

    def D(self, x, y):
        return self.triple(x, y)[1]

    def S(self, x, y):
        return self.triple(x, y)[0]

    def I(self, x, y):
        return self.triple(x, y)[2]

    # -- correlators ---------------------------------------------------------------
    def rho1(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.path is KernelPath.SUM:
            P, Q, FP, FQ, lg, lh = self.features(x)
            _, S, _ = self._sum_parts((P, Q, FP, FQ, lg, lh), (P, Q, FP, FQ, lg, lh))
            return S
        return self.gauged(x, x)[1]

    def rho2(self, x, y):
        """Two-point function; x and y broadcast (e.g. x[:, None], y[None, :] for a table)."""
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if self.path is KernelPath.SUM:
            fx, fy = self.features(x), self.features(y)
            _, Sxx, _ = self._sum_parts(fx, fx)
            _, Syy, _ = self._sum_parts(fy, fy)
            Dxy, Sxy, Ixy = self._sum_parts(fx, fy)
            _, Syx, _ = self._sum_parts(fy, fx)
            Ixy = Ixy - _F_gauged(x, y, self.params)
        else:
            Sxx = self.gauged(x, x)[1]
            Syy = self.gauged(y, y)[1]
            Dxy, Sxy, Ixy = self.gauged(x, y)
            Syx = self.gauged(y, x)[1]
        return Sxx * Syy + Ixy * Dxy - Sxy * Syx

    def kernel_matrix(self, points):
        """Gauged 2k x 2k antisymmetric matrix with blocks [[I, S], [-S^T, -D]]."""
        d = np.asarray(points, dtype=np.float64)
        k = d.shape[-1]
        X, Y = d[..., :, None], d[..., None, :]
        D, S, I = self.gauged(X, Y)
        M = np.zeros(d.shape[:-1] + (2 * k, 2 * k))
        M[..., 0::2, 0::2] = I
        M[..., 0::2, 1::2] = S
        M[..., 1::2, 0::2] = -np.swapaxes(S, -1, -2)
        M[..., 1::2, 1::2] = -D
        # exact antisymmetry; quadrature noise on the diagonal of I, D is zeroed
        return 0.5 * (M - np.swapaxes(M, -1, -2))

    def rho_k(self, points):
        d = np.asarray(points, dtype=np.float64)
        if d.ndim != 1 or d.size < 1:
            raise ValueError("points must be a non-empty 1-d sequence")
        if np.unique(d).size < d.size:
            return 0.0
        sign, logmag = pfaffian(self.kernel_matrix(d))
        return float(sign * np.exp(logmag))


# ---------------------------------------------------------------------------
# functional interface
# ---------------------------------------------------------------------------

def _ks(p, path=KernelPath.SUM):
    return KernelSet(p, path=path)


def kernel_D(x, y, p: ModelParams, path=KernelPath.CD):
    return _ks(p, path).D(x, y)


def kernel_S(x, y, p: ModelParams, path=KernelPath.SUM):
    return _ks(p, path).S(x, y)


def kernel_I(x, y, p: ModelParams, path=KernelPath.SUM):
    return _ks(p, path).I(x, y)


def kernels_nu1(x, y, p: ModelParams, path=KernelPath.CD):
    """(S, D, I) for nu = 1; default route is the reduced CD form."""
    if p.nu != 1:
        raise ValueError("kernels_nu1 requires nu = 1")
    return _ks(p, path).triple(x, y)


def rho1(x, p: ModelParams):
    return _ks(p).rho1(x)


def rho2(x, y, p: ModelParams):
    return _ks(p).rho2(x, y)


def rho_k(points, p: ModelParams):
    return _ks(p).rho_k(points)


# ---------------------------------------------------------------------------
# chiral GUE references (a = 0)
# ---------------------------------------------------------------------------

def chgue_density_finite(y, n: int, nu: int):
    """Finite-n chGUE density of the off-diagonal block eigenvalues, nu in {0, 1}."""
    y = np.asarray(y, dtype=np.float64)
    t = 0.5 * y * y
    if nu == 0:
        L = laguerre_table(n - 1, 0, t)
        out = np.abs(y) * np.exp(-t) * np.sum(L * L, axis=-1)
    elif nu == 1:
        L = laguerre_table(n - 1, 1, t)
        norm = 2.0 * (np.arange(n) + 1.0)
        out = np.abs(y) ** 3 * np.exp(-t) * np.sum(L * L / norm, axis=-1)
    else:
        raise ValueError("nu must be 0 or 1")
    return out[()] if out.ndim == 0 else out


def shift_map(density, m: float):
    """Density of x = +-sqrt(y^2 + m^2) given the density of y."""
    def shifted(x):
        x = np.asarray(x, dtype=np.float64)
        inside = np.abs(x) > m
        r = np.sqrt(np.where(inside, x * x - m * m, 1.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.where(inside, np.abs(x) / r * density(r), 0.0)
        return val[()] if val.ndim == 0 else val
    return shifted
