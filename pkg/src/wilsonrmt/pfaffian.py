"""Pfaffians of real antisymmetric matrices (batched), in sign/log form."""
from __future__ import annotations

import numpy as np

__all__ = ["pfaffian", "pfaffian_bordered", "ZERO_PIVOT_TOL"]

# A pivot column whose largest entry is below this fraction of max|A| is
# treated as a structural zero and the Pfaffian is reported as exactly 0.
ZERO_PIVOT_TOL = 1e-13


def pfaffian(A):
    """Pf(A) as (sign, log|Pf|) by Parlett-Reid elimination with partial pivoting.

    A has shape (..., 2k, 2k); only antisymmetry is assumed, not checked.
    Leading axes are batch axes. Exact zeros give sign 0 and log -inf.
    """
    A = np.array(A, dtype=np.float64, copy=True)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise ValueError("expected square matrices")
    batch = A.shape[:-2]
    n = A.shape[-1]
    if n == 0:
        return _out(np.ones(max(1, int(np.prod(batch)))), np.zeros(max(1, int(np.prod(batch)))), batch)
    A = A.reshape((-1, n, n))
    B = A.shape[0]
    sign = np.ones(B)
    logmag = np.zeros(B)
    if n % 2:
        sign[:] = 0.0
        logmag[:] = -np.inf
        return _out(sign, logmag, batch)

    scale = np.max(np.abs(A), axis=(1, 2))
    dead = scale == 0
    scale[dead] = 1.0
    A /= scale[:, None, None]
    logmag += 0.5 * n * np.log(scale)

    rows = np.arange(B)
    for k in range(0, n - 1, 2):
        col = np.abs(A[:, k + 1:, k])
        kp = k + 1 + np.argmax(col, axis=1)
        swap = kp != k + 1
        if np.any(swap):
            b, q = rows[swap], kp[swap]
            tmp = A[b, k + 1, :].copy()
            A[b, k + 1, :] = A[b, q, :]
            A[b, q, :] = tmp
            tmp = A[b, :, k + 1].copy()
            A[b, :, k + 1] = A[b, :, q]
            A[b, :, q] = tmp
            sign[swap] *= -1.0
        piv = A[:, k, k + 1]
        dead |= np.abs(piv) <= ZERO_PIVOT_TOL
        safe = np.where(dead, 1.0, piv)
        sign *= np.sign(safe)
        logmag += np.log(np.abs(safe))
        if k + 2 < n:
            tau = A[:, k, k + 2:] / safe[:, None]
            c = A[:, k + 2:, k + 1]
            A[:, k + 2:, k + 2:] += tau[:, :, None] * c[:, None, :] - c[:, :, None] * tau[:, None, :]
    sign[dead] = 0.0
    logmag[dead] = -np.inf
    return _out(sign, logmag, batch)


def _out(sign, logmag, batch):
    if batch == ():
        return float(sign[0]), float(logmag[0])
    return sign.reshape(batch), logmag.reshape(batch)


def pfaffian_bordered(F_block, border):
    """Pf [[F, B], [-B^T, 0]] for antisymmetric F (..., M, M) and border B (..., M, c).

    M + c must be even (c = 1 pairs with odd M).
    """
    F_block = np.asarray(F_block, dtype=np.float64)
    border = np.asarray(border, dtype=np.float64)
    if border.ndim == F_block.ndim - 1:
        border = border[..., None]
    M, c = border.shape[-2], border.shape[-1]
    if F_block.shape[-1] != M:
        raise ValueError("border rows must match the block dimension")
    if (M + c) % 2:
        raise ValueError(f"total dimension {M + c} is odd")
    batch = np.broadcast_shapes(F_block.shape[:-2], border.shape[:-2])
    full = np.zeros(batch + (M + c, M + c))
    full[..., :M, :M] = F_block
    full[..., :M, M:] = border
    full[..., M:, :M] = -np.swapaxes(border, -1, -2)
    return pfaffian(full)
