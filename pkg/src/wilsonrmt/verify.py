"""Fast invariant suite behind `wrmt verify`.

Each check returns (name, passed, detail). The thresholds are those of the
library's documented invariants; the parameter grids are smaller than the
test-suite ones so the whole run takes well under a minute.
"""
from __future__ import annotations

from math import pi, sqrt

import numpy as np

from .kernels import KernelPath, KernelSet, chgue_density_finite, shift_map
from .microscopic import chgue_density_micro, partition_nf1_micro, rho_s
from .montecarlo import RngConfig, jpdf_density_smalln, sample_spectra
from .pfaffian import pfaffian
from .sop import MicroParams, ModelParams, r_even
from .special_fn import bessel_i_entire, gauss_rule, laguerre_table

__all__ = ["run_checks", "CHECKS"]


def _quadrature():
    worst = 0.0
    for q in (2, 16, 64, 128):
        r = gauss_rule("hermite", q)
        for k in range(0, 2 * q, 2):
            exact = np.exp(np.sum(np.log(np.arange(1, k, 2) / 2.0))) * sqrt(pi) if k else sqrt(pi)
            worst = max(worst, abs(np.sum(r.weights * r.nodes ** k) - exact) / exact)
    return worst < 1e-10, f"max relative moment error {worst:.2e}"


def _laguerre():
    x = np.linspace(0.0, 40.0, 41)
    worst = 0.0
    for al in (0, 1, 2):
        L = laguerre_table(30, al, x)
        k = np.arange(1, 30)
        res = (k + 1) * L[:, 2:] - (2 * k + 1 + al - x[:, None]) * L[:, 1:-1] + (k + al) * L[:, :-2]
        worst = max(worst, float(np.max(np.abs(res) / np.max(np.abs(L), axis=1, keepdims=True))))
    return worst < 1e-10, f"max scaled recurrence residual {worst:.2e}"


def _ihat():
    u = np.linspace(0.0, 100.0, 101)
    ref = np.i0(np.sqrt(u))
    err = float(np.max(np.abs(bessel_i_entire(0, u) - ref) / ref))
    return err < 1e-12, f"max relative error {err:.2e}"


def _parity():
    p = ModelParams(3, 0, 0.3, 0.5)
    x = np.linspace(0.1, 3, 7)
    err = max(abs(r_even(j, -xx, p) - r_even(j, xx, p)) / max(1.0, abs(r_even(j, xx, p)))
              for j in range(4) for xx in x)
    return err < 1e-12, f"max parity defect {err:.2e}"


def _normalisation():
    gl, gw = np.polynomial.legendre.leggauss(240)
    out = []
    ok = True
    for p in (ModelParams(2, 0, 0.3, 0.4), ModelParams(2, 1, 0.3, 1.0)):
        L = 8.0 + p.m
        tot = float(np.sum(gw * KernelSet(p).rho1(L * gl)) * L)
        rel = abs(tot - p.N) / p.N
        ok &= rel < 1e-4
        out.append(f"N={p.N}: {tot:.8f}")
    return ok, "; ".join(out)


def _paths():
    worst = 0.0
    for p in (ModelParams(3, 0, 0.3, 0.4), ModelParams(3, 1, 0.3, 1.0)):
        a = KernelSet(p).gauged(np.array([0.4, -1.2]), np.array([1.1, 0.7]))
        b = KernelSet(p, path=KernelPath.CD, z_order=64).gauged(np.array([0.4, -1.2]), np.array([1.1, 0.7]))
        for u, v in zip(a, b):
            worst = max(worst, float(np.max(np.abs(u - v) / np.maximum(np.abs(u), 1e-3))))
    return worst < 1e-6, f"max relative path difference {worst:.2e}"


def _pfaff():
    rng = np.random.default_rng(12345)
    worst = 0.0
    for n in (2, 8, 32, 64):
        A = rng.standard_normal((n, n))
        A = A - A.T
        s, l = pfaffian(A)
        sd, ld = np.linalg.slogdet(A)
        worst = max(worst, abs(np.expm1(2 * l - ld)))
    return worst < 1e-10, f"max |Pf^2/det - 1| {worst:.2e}"


def _rho_k():
    p = ModelParams(3, 0, 0.3, 0.4)
    ks = KernelSet(p)
    a = ks.rho_k([0.3, -0.8])
    b = float(ks.rho2(0.3, -0.8))
    return abs(a - b) <= 1e-10 * max(1.0, abs(b)), f"Pfaffian {a:.12g} vs expansion {b:.12g}"


def _chgue_limit():
    worst = 0.0
    for nu in (0, 1):
        p = ModelParams(4, nu, 1e-3, 0.4)
        x = np.concatenate([np.linspace(-3, -0.6, 25), np.linspace(0.6, 3, 25)])
        ref = shift_map(lambda y: chgue_density_finite(y, 4, nu), 0.4)(x)
        worst = max(worst, float(np.max(np.abs(KernelSet(p).rho1(x) - ref))))
    return worst < 5e-2, f"sup distance {worst:.2e}"


def _partition():
    worst = 0.0
    for mh in (0.0, 1.0, 3.0):
        for zh in (0.0, 0.5):
            for ah in (0.1, 0.3):
                for nu in (0, 1):
                    worst = max(worst, partition_nf1_micro(MicroParams(mh, ah, zh, nu)).rel_discrepancy)
    return worst < 1e-8, f"max relative discrepancy {worst:.2e}"


def _micro_bessel():
    mp = MicroParams(1.0, 1e-3)
    x = np.linspace(1.3, 8.0, 12)
    err = float(np.max(np.abs(rho_s(x, mp) - chgue_density_micro(np.sqrt(x * x - 1.0), 0) * x / np.sqrt(x * x - 1.0))))
    return err < 5e-3, f"sup distance {err:.2e}"


def _jpdf():
    p = ModelParams(1, 0, 0.5, 0.3)
    g = np.linspace(-3, 3, 13)
    err = float(np.max(np.abs(jpdf_density_smalln(p, g).values - KernelSet(p).rho1(g))))
    return err < 1e-4, f"max difference {err:.2e}"


def _moments():
    p = ModelParams(2, 1, 0.4, 0.5)
    ev = sample_spectra(p, 20_000, RngConfig(2024, 2))
    s1, s2 = ev.sum(1), (ev ** 2).sum(1)
    N = p.N
    z1 = (s1.mean() + p.m * p.nu) / (s1.std(ddof=1) / sqrt(s1.size))
    target = N * p.m ** 2 + 4 * p.n * (p.n + p.nu) * (1 - p.a ** 2) + 2 * p.a ** 2 * N * N
    z2 = (s2.mean() - target) / (s2.std(ddof=1) / sqrt(s2.size))
    return abs(z1) < 3 and abs(z2) < 3, f"z-scores {z1:.2f}, {z2:.2f}"


CHECKS = [
    ("special_fn.quadrature_exactness", _quadrature),
    ("special_fn.laguerre_recurrence", _laguerre),
    ("special_fn.ihat_vs_i0", _ihat),
    ("sop.parity", _parity),
    ("kernels.normalisation", _normalisation),
    ("kernels.path_independence", _paths),
    ("kernels.chgue_limit", _chgue_limit),
    ("pfaffian.pf_squared_det", _pfaff),
    ("kernels.rho_k_vs_rho2", _rho_k),
    ("microscopic.partition_dual_form", _partition),
    ("microscopic.bessel_limit", _micro_bessel),
    ("montecarlo.jpdf_vs_kernel", _jpdf),
    ("montecarlo.moments", _moments),
]


def run_checks(names=None):
    results = []
    for name, fn in CHECKS:
        if names and name not in names:
            continue
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failed check, reported by name
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append({"name": name, "passed": bool(ok), "detail": detail})
    return results
