"""Batched Hermitian eigenvalues: Householder tridiagonalisation + implicit QL.

Operates on stacks of small dense matrices (leading axes are batch axes).
Eigenvalues only.
"""
from __future__ import annotations

import numpy as np

__all__ = ["tridiagonalize", "tridiag_eigvalsh", "eigvalsh", "QL_MAX_ITER"]

QL_MAX_ITER = 60


def tridiagonalize(A):
    """Reduce Hermitian A (..., N, N) to real symmetric tridiagonal (d, e).

    e[..., k] couples d[..., k] and d[..., k+1]. Off-diagonal phases are
    removed by a diagonal unitary, so only |e| is returned.
    """
    A = np.array(A, dtype=np.complex128, copy=True)
    batch = A.shape[:-2]
    N = A.shape[-1]
    A = A.reshape((-1, N, N))
    for k in range(N - 2):
        x = A[:, k + 1:, k]
        xnorm = np.linalg.norm(x, axis=1)
        x0 = x[:, 0]
        phase = np.where(np.abs(x0) > 0, x0 / np.where(np.abs(x0) > 0, np.abs(x0), 1.0), 1.0)
        alpha = -phase * xnorm
        v = x.copy()
        v[:, 0] -= alpha
        vnorm = np.linalg.norm(v, axis=1)
        live = vnorm > 0
        v /= np.where(live, vnorm, 1.0)[:, None]
        v[~live] = 0.0
        # H = I - 2 v v^H;  H A H = A - 2 v w^H - 2 w v^H with w = p - (v^H p) v, p = A v
        S = A[:, k + 1:, k + 1:]
        p = np.einsum("bij,bj->bi", S, v)
        K = np.einsum("bi,bi->b", v.conj(), p).real
        w = p - K[:, None] * v
        S -= 2.0 * (v[:, :, None] * w.conj()[:, None, :] + w[:, :, None] * v.conj()[:, None, :])
        A[:, k + 1:, k + 1:] = S
        col = np.zeros_like(x)
        col[:, 0] = np.where(live, alpha, x0)
        A[:, k + 1:, k] = col
        A[:, k, k + 1:] = col.conj()
    d = np.real(np.diagonal(A, axis1=1, axis2=2)).copy()
    e = np.abs(np.diagonal(A, offset=-1, axis1=1, axis2=2))
    return d.reshape(batch + (N,)), e.reshape(batch + (N - 1,))


def tridiag_eigvalsh(d, e, max_iter: int = QL_MAX_ITER):
    """Eigenvalues (ascending) of symmetric tridiagonal matrices by implicit-shift QL.

    Returns (eigenvalues, converged) where converged is a boolean per matrix;
    rows that hit the iteration cap are filled with nan.
    """
    d = np.array(d, dtype=np.float64, copy=True)
    batch = d.shape[:-1]
    N = d.shape[-1]
    d = d.reshape((-1, N))
    B = d.shape[0]
    ee = np.zeros((B, N))
    ee[:, :N - 1] = np.asarray(e, dtype=np.float64).reshape((-1, N - 1))
    ok = np.ones(B, dtype=bool)
    eps = np.finfo(np.float64).eps
    idx = np.arange(N)
    for l in range(N):
        it = 0
        while True:
            # first mm >= l with negligible e[mm] (mm = N-1 if none)
            small = np.abs(ee[:, :N - 1]) <= eps * (np.abs(d[:, :N - 1]) + np.abs(d[:, 1:]))
            small |= idx[None, :N - 1] < l
            small = np.concatenate([small, np.ones((B, 1), dtype=bool)], axis=1)
            small[:, :l] = False
            mm = np.argmax(small, axis=1)
            act = (mm > l) & ok
            if not np.any(act):
                break
            it += 1
            if it > max_iter:
                ok &= ~act
                break
            el = np.where(act, ee[:, l], 1.0)
            g = (d[:, l + 1] - d[:, l]) / (2.0 * el)
            r = np.hypot(g, 1.0)
            g = np.take_along_axis(d, mm[:, None], 1)[:, 0] - d[:, l] + el / (g + np.copysign(r, g))
            s = np.ones(B)
            c = np.ones(B)
            p = np.zeros(B)
            brk = np.zeros(B, dtype=bool)
            for i in range(N - 2, l - 1, -1):
                mask = act & (i < mm) & ~brk
                if not np.any(mask):
                    continue
                f = s * ee[:, i]
                b = c * ee[:, i]
                r = np.hypot(f, g)
                zero = mask & (r == 0)
                if np.any(zero):
                    d[zero, i + 1] -= p[zero]
                    ee[zero, mm[zero]] = 0.0
                    brk |= zero
                    mask &= ~zero
                rs = np.where(mask, r, 1.0)
                ee[:, i + 1] = np.where(mask, r, ee[:, i + 1])
                s_new = f / rs
                c_new = g / rs
                g_new = d[:, i + 1] - p
                r2 = (d[:, i] - g_new) * s_new + 2.0 * c_new * b
                p_new = s_new * r2
                d[:, i + 1] = np.where(mask, g_new + p_new, d[:, i + 1])
                g = np.where(mask, c_new * r2 - b, g)
                s = np.where(mask, s_new, s)
                c = np.where(mask, c_new, c)
                p = np.where(mask, p_new, p)
            fin = act & ~brk
            d[fin, l] -= p[fin]
            ee[fin, l] = g[fin]
            ee[fin, mm[fin]] = 0.0
    d[~ok] = np.nan
    return np.sort(d, axis=1).reshape(batch + (N,)), ok.reshape(batch)


def eigvalsh(A, max_iter: int = QL_MAX_ITER):
    """(ascending eigenvalues, converged mask) for Hermitian A (..., N, N)."""
    A = np.asarray(A)
    if A.shape[-1] == 1:
        return np.real(A[..., 0]).copy(), np.ones(A.shape[:-2], dtype=bool)
    d, e = tridiagonalize(A)
    return tridiag_eigvalsh(d, e, max_iter)
