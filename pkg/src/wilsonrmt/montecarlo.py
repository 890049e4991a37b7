"""Monte Carlo sampling of the two-matrix ensembles.

Draw schedule: the master seed feeds a numpy SeedSequence that is spawned
into `streams` child generators. Draw i belongs to stream i % streams and is
generated in fixed-size chunks, so the output depends only on
(seed, streams, draws) and never on how many workers run the streams.
"""
from __future__ import annotations

import logging
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from math import comb, factorial, sqrt

import numpy as np

from .curve import DensityCurve
from .eigen import eigvalsh
from .kernels import _F_gauged, _G
from .pfaffian import pfaffian
from .sop import ModelParams

__all__ = [
    "RngConfig",
    "SpectrumSample",
    "Model2Params",
    "EigensolverError",
    "draw_d5",
    "draw_d5_model2",
    "sample_d5",
    "sample_d5_model2",
    "sample_spectra",
    "histogram",
    "mc_expect_det",
    "jpdf_density_smalln",
    "write_archive",
    "read_archive",
    "worker_count",
    "DEFAULT_MOMENT_DRAWS",
    "DEFAULT_HISTOGRAM_DRAWS",
]

log = logging.getLogger(__name__)

DEFAULT_MOMENT_DRAWS = 100_000
DEFAULT_HISTOGRAM_DRAWS = 1_000_000
JPDF_DEFAULT_ORDER = {2: 120, 3: 80, 4: 48}
CHUNK = 10_000          # draws generated per call into a stream's generator
ARCHIVE_MAGIC = b"WRMT"
ARCHIVE_VERSION = 1
_HEADER = struct.Struct("<4sIIIddQ")


class EigensolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class RngConfig:
    seed: int = 0
    streams: int = 1

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if int(self.streams) < 1:
            raise ValueError("streams must be >= 1")

    def generators(self):
        ss = np.random.SeedSequence(int(self.seed))
        return [np.random.Generator(np.random.PCG64(s)) for s in ss.spawn(int(self.streams))]


@dataclass(frozen=True)
class SpectrumSample:
    eigenvalues: np.ndarray
    stream: int
    index: int


@dataclass(frozen=True)
class Model2Params:
    """Second matrix model: D5 = [[m + a A, W], [W^H, -m - a B]], any a >= 0."""
    n: int
    nu: int
    a: float
    m: float

    def __post_init__(self):
        if self.n < 1 or self.nu < 0 or self.a < 0 or self.m < 0:
            raise ValueError("need n >= 1, nu >= 0, a >= 0, m >= 0")

    @property
    def N(self) -> int:
        return 2 * self.n + self.nu


def worker_count() -> int:
    env = os.environ.get("WRMT_THREADS")
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


# ---------------------------------------------------------------------------
# matrix draws
# ---------------------------------------------------------------------------

def _cgauss(rng, shape):
    """Complex normal with E|z|^2 = 2."""
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _gue(rng, count, k, var):
    """Hermitian k x k with E[H_ii^2] = var and E|H_ij|^2 = var."""
    G = _cgauss(rng, (count, k, k))
    return (G + np.conj(np.swapaxes(G, 1, 2))) * sqrt(var / 4.0)


def draw_d5(p: ModelParams, rng, count: int) -> np.ndarray:
    """`count` matrices D5 = [[m, W], [W^H, -m]] + H as a (count, N, N) array."""
    n, N = p.n, p.N
    W = _cgauss(rng, (count, n, n + p.nu)) * sqrt(1.0 - p.a ** 2)
    H = _gue(rng, count, N, 2.0 * p.a ** 2)
    H[:, :n, n:] += W
    H[:, n:, :n] += np.conj(np.swapaxes(W, 1, 2))
    i = np.arange(N)
    H[:, i, i] += np.where(i < n, p.m, -p.m)
    return H


def draw_d5_model2(p: Model2Params, rng, count: int) -> np.ndarray:
    n, N = p.n, p.N
    A = _gue(rng, count, n, 2.0)
    Bm = _gue(rng, count, n + p.nu, 2.0)
    W = _cgauss(rng, (count, n, n + p.nu))
    D = np.zeros((count, N, N), dtype=np.complex128)
    D[:, :n, :n] = p.a * A
    D[:, n:, n:] = -p.a * Bm
    D[:, :n, n:] = W
    D[:, n:, :n] = np.conj(np.swapaxes(W, 1, 2))
    i = np.arange(N)
    D[:, i, i] += np.where(i < n, p.m, -p.m)
    return D


def _spectra(D, solver):
    if solver == "numpy":
        return np.linalg.eigvalsh(D), np.ones(D.shape[0], dtype=bool)
    return eigvalsh(D)


def sample_d5(p: ModelParams, rng, solver: str = "ql") -> SpectrumSample:
    ev, ok = _spectra(draw_d5(p, rng, 1), solver)
    if not ok[0]:
        raise EigensolverError("QL iteration cap reached")
    return SpectrumSample(ev[0], 0, 0)


def sample_d5_model2(p: Model2Params, rng, solver: str = "ql") -> SpectrumSample:
    ev, ok = _spectra(draw_d5_model2(p, rng, 1), solver)
    if not ok[0]:
        raise EigensolverError("QL iteration cap reached")
    return SpectrumSample(ev[0], 0, 0)


def _run_stream(p, gen, count, model, solver):
    out = np.empty((count, p.N))
    good = np.ones(count, dtype=bool)
    draw = draw_d5 if model == 1 else draw_d5_model2
    for lo in range(0, count, CHUNK):
        c = min(CHUNK, count - lo)
        ev, ok = _spectra(draw(p, gen, c), solver)
        out[lo:lo + c] = ev
        good[lo:lo + c] = ok
    return out, good


def sample_spectra(p, draws: int, rng: RngConfig = RngConfig(), model: int = 1,
                   solver: str = "ql", workers: int | None = None) -> np.ndarray:
    """(kept_draws, N) eigenvalues; draws that fail to converge are dropped and logged."""
    if draws < 1:
        raise ValueError("draws must be >= 1")
    S = rng.streams
    counts = [draws // S + (1 if k < draws % S else 0) for k in range(S)]
    gens = rng.generators()
    workers = workers or worker_count()
    jobs = [(p, g, c, model, solver) for g, c in zip(gens, counts)]
    if workers > 1 and S > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda a: _run_stream(*a), jobs))
    else:
        parts = [_run_stream(*j) for j in jobs]
    # interleave so draw i comes from stream i % S
    ev = np.empty((draws, p.N))
    ok = np.empty(draws, dtype=bool)
    for k, (e, g) in enumerate(parts):
        ev[k::S] = e
        ok[k::S] = g
    bad = int((~ok).sum())
    if bad:
        log.warning("eigensolver did not converge for %d of %d draws; skipped", bad, draws)
    return ev[ok]


# ---------------------------------------------------------------------------
# statistics
# ---------------------------------------------------------------------------

def histogram(samples, window, bins: int, rescale: float | None = None,
              meta: dict | None = None) -> DensityCurve:
    """Eigenvalue density histogram.

    samples: (draws, N) array. The density integrates to N times the fraction
    of eigenvalues inside the window. With rescale = s the abscissa becomes
    x * s and the density is divided by s (microscopic convention s = sqrt(2n)).
    Per-bin standard errors go to meta["stderr"].
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size == 0:
        raise ValueError("empty sample")
    if samples.ndim == 1:
        samples = samples[:, None]
    lo, hi = map(float, window)
    if bins < 1 or not hi > lo:
        raise ValueError("need bins >= 1 and a non-empty window")
    draws = samples.shape[0]
    edges = np.linspace(lo, hi, bins + 1)
    counts = np.histogram(samples.ravel(), edges)[0].astype(np.float64)
    width = edges[1] - edges[0]
    sc = 1.0 if rescale is None else float(rescale)
    dens = counts / (draws * width * sc)
    se = _binned_stderr(samples, edges) / (width * sc)
    centers = 0.5 * (edges[1:] + edges[:-1]) * sc
    m = {"kind": "mc_histogram", "draws": draws, "edges": edges * sc, "stderr": se,
         "counts": counts}
    if meta:
        m.update(meta)
    return DensityCurve(centers, dens, m)


def _binned_stderr(samples, edges):
    """Standard error of the mean per-draw bin count."""
    draws = samples.shape[0]
    bins = edges.size - 1
    s1 = np.zeros(bins)
    s2 = np.zeros(bins)
    for lo in range(0, draws, 50_000):
        blk = samples[lo:lo + 50_000]
        idx = np.searchsorted(edges, blk, side="right") - 1
        idx[blk == edges[-1]] = bins - 1
        inside = (idx >= 0) & (idx < bins)
        rows = np.broadcast_to(np.arange(blk.shape[0])[:, None], blk.shape)
        cnt = np.zeros((blk.shape[0], bins))
        np.add.at(cnt, (rows[inside], idx[inside]), 1.0)
        s1 += cnt.sum(0)
        s2 += (cnt * cnt).sum(0)
    mean = s1 / draws
    var = (s2 - draws * mean * mean) / max(draws - 1, 1)
    return np.sqrt(np.maximum(var, 0.0) / draws)


def mc_expect_det(z, p: ModelParams, draws: int = DEFAULT_MOMENT_DRAWS,
                  rng: RngConfig = RngConfig(), spectra=None):
    """(mean, standard error) of det(z + D5) = prod_i (z + lambda_i).

    The products are formed as sign * exp(log|.|) relative to the largest
    log-magnitude, so neither the products nor their squares overflow.
    """
    if draws < 1000 and spectra is None:
        raise ValueError("need at least 1000 draws")
    ev = sample_spectra(p, draws, rng) if spectra is None else np.asarray(spectra)
    zz = np.atleast_1d(np.asarray(z, dtype=np.float64))
    est, err = [], []
    for zv in zz:
        t = zv + ev
        sg = np.prod(np.sign(t), axis=1)
        with np.errstate(divide="ignore"):
            lg = np.sum(np.log(np.abs(t)), axis=1)
        top = np.max(lg)
        v = sg * np.exp(lg - top)
        mean = v.mean()
        se = v.std(ddof=1) / sqrt(v.size)
        est.append(mean * np.exp(top))
        err.append(se * np.exp(top))
    est, err = np.array(est), np.array(err)
    if np.ndim(z) == 0:
        return float(est[0]), float(err[0])
    return est, err


# ---------------------------------------------------------------------------
# direct jpdf quadrature at n = 1
# ---------------------------------------------------------------------------

def _jpdf_weight(d, p: ModelParams):
    """Unnormalised jpdf at points d (..., N), gauged: Delta(d) Pf[w w F, w border]."""
    N, nu = p.N, p.nu
    a2 = p.a ** 2
    di, dj = d[..., :, None], d[..., None, :]
    # w(d_i) w(d_j) F(d_j - d_i) = F^(d_j, d_i) e^{G(d_i)+G(d_j) - (d_i^2+d_j^2)/4a^2}
    lg = _G(d, p) - d * d / (4 * a2)
    blk = _F_gauged(dj, di, p) * np.exp(lg[..., :, None] + lg[..., None, :])
    M = np.zeros(d.shape[:-1] + (N + nu, N + nu))
    M[..., :N, :N] = blk
    for q in range(nu):
        # w(d) d^q e^{-dm/2a^2} = d^q e^{-(d+m)^2/4a^2} e^{m^2/4a^2}; constant dropped
        col = d ** q * np.exp(-(d + p.m) ** 2 / (4 * a2))
        M[..., :N, N + q] = col
        M[..., N + q, :N] = -col
    sign, lm = pfaffian(M)
    vdm = np.ones(d.shape[:-1])
    for i in range(N):
        for j in range(i + 1, N):
            vdm = vdm * (d[..., j] - d[..., i])
    return vdm * sign * np.exp(lm)


def _pair_table(u, v, p: ModelParams):
    """T[i, j] = w(u_i) w(v_j) F(v_j - u_i), gauged as in _jpdf_weight."""
    a2 = p.a ** 2
    lu = _G(u, p) - u * u / (4 * a2)
    lv = _G(v, p) - v * v / (4 * a2)
    U, V = u[:, None], v[None, :]
    return _F_gauged(V, U, p) * np.exp(lu[:, None] + lv[None, :])


def _border(d, p: ModelParams):
    """(..., nu) columns d^q e^{-(d+m)^2/4a^2}."""
    q = np.arange(p.nu)
    return d[..., None] ** q * np.exp(-(d[..., None] + p.m) ** 2 / (4 * p.a ** 2))


def jpdf_density_smalln(p: ModelParams, grid, order: int | None = None,
                        half_width: float | None = None, max_nodes: int = 2_000_000) -> DensityCurve:
    """One-point density at n = 1 by direct quadrature of the eigenvalue jpdf.

    The N-1 remaining eigenvalues are integrated with a tensor Gauss-Legendre
    rule on [-L, L]. The integrand is symmetric in them and vanishes when two
    coincide, so only strictly ordered node tuples are summed, with weight
    (N-1)!. Pair values w w F are tabulated once on the nodes. The result is
    normalised to integrate to N.
    """
    if p.n != 1:
        raise ValueError("jpdf_density_smalln requires n = 1")
    N, nu = p.N, p.nu
    k = N - 1
    if order is None:
        order = JPDF_DEFAULT_ORDER.get(N, 30)
    if half_width is None:
        sig2 = (N * p.m ** 2 + 4 * p.n * (p.n + p.nu) * (1 - p.a ** 2) + 2 * p.a ** 2 * N * N) / N
        half_width = p.m + 4.0 * sqrt(sig2)
    L = float(half_width)
    if comb(order, k) > max_nodes:
        raise ValueError(f"quadrature budget exceeded: C({order}, {k}) node tuples")
    t, wt = np.polynomial.legendre.leggauss(order)
    t, wt = L * t, L * wt
    idx = np.array(list(combinations(range(order), k)), dtype=np.intp).reshape(-1, k)
    wk = factorial(k) * np.prod(wt[idx], axis=1)
    T = _pair_table(t, t, p)
    inner = T[idx[:, :, None], idx[:, None, :]]                       # (K, k, k)
    bt = _border(t, p)[idx]                                           # (K, k, nu)
    vdm = np.ones(idx.shape[0])
    for i in range(k):
        for j in range(i + 1, k):
            vdm *= t[idx[:, j]] - t[idx[:, i]]
    dim = N + nu

    def marginal(xs):
        out = np.empty(xs.size)
        step = max(1, 300_000 // idx.shape[0])
        for lo in range(0, xs.size, step):
            xb = xs[lo:lo + step]
            Tx = _pair_table(xb, t, p)[:, idx]                        # (X, K, k)
            M = np.zeros((xb.size, idx.shape[0], dim, dim))
            M[:, :, 0, 1:N] = Tx
            M[:, :, 1:N, 0] = -Tx
            M[:, :, 1:N, 1:N] = inner
            if nu:
                bx = _border(xb, p)                                   # (X, nu)
                M[:, :, 0, N:] = bx[:, None, :]
                M[:, :, N:, 0] = -bx[:, None, :]
                M[:, :, 1:N, N:] = bt
                M[:, :, N:, 1:N] = -np.swapaxes(bt, -1, -2)
            sign, lm = pfaffian(M)
            vx = np.prod(t[idx][None, :, :] - xb[:, None, None], axis=-1)
            out[lo:lo + step] = (vx * vdm * sign * np.exp(lm)) @ wk
        return out

    grid = np.asarray(grid, dtype=np.float64).ravel()
    total = marginal(t) @ wt
    vals = N * marginal(grid) / total
    return DensityCurve(grid, vals, {"kind": "jpdf_quadrature", "params": p.as_dict(),
                                     "order": order, "half_width": L})


# ---------------------------------------------------------------------------
# binary archive
# ---------------------------------------------------------------------------

def write_archive(path, p, spectra) -> None:
    spectra = np.ascontiguousarray(spectra, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(ARCHIVE_MAGIC, ARCHIVE_VERSION, p.n, p.nu, float(p.a), float(p.m),
                              spectra.shape[0]))
        fh.write(spectra.tobytes())


def read_archive(path):
    """(header dict, (draws, N) eigenvalue array)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, ver, n, nu, a, m, draws = _HEADER.unpack_from(raw, 0)
    if magic != ARCHIVE_MAGIC:
        raise ValueError("not a WRMT archive")
    N = 2 * n + nu
    ev = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if ev.size != draws * N:
        raise ValueError("archive truncated")
    return ({"version": ver, "n": n, "nu": nu, "a": a, "m": m, "draws": draws},
            ev.reshape(draws, N).astype(np.float64))
