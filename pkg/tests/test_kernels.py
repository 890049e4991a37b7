import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import F_integral, rho1_two_level
from wilsonrmt.kernels import (KernelPath, KernelSet, chgue_density_finite, kernel_D, kernel_I,
                               kernel_S, kernels_nu1, rho1, rho2, rho_k, shift_map, weight_F,
                               weight_f, weight_w)
from wilsonrmt.sop import ModelParams

gl, gw = np.polynomial.legendre.leggauss(400)


def _half_width(p):
    rms2 = (p.N * p.m ** 2 + 4 * p.n * (p.n + p.nu) * (1 - p.a ** 2) + 2 * p.a ** 2 * p.N ** 2) / p.N
    return p.m + 5 * np.sqrt(rms2)


# -- weights ------------------------------------------------------------------------

@pytest.mark.parametrize("a,m", [(0.1, 0.0), (0.3, 0.5), (0.5, 1.0), (0.9, 0.2)])
@pytest.mark.parametrize("x", [-1.3, -0.2, 0.05, 0.7, 2.0])
def test_F_matches_integral(a, m, x):
    p = ModelParams(1, 0, a, m)
    sg, lf = weight_F(x, p)
    assert sg * np.exp(lf) == pytest.approx(F_integral(x, a, m), rel=1e-9, abs=1e-300)


@given(st.floats(0.05, 0.95), st.floats(0, 2), st.floats(-5, 5))
def test_F_odd(a, m, x):
    p = ModelParams(1, 0, a, m)
    s1, l1 = weight_F(x, p)
    s2, l2 = weight_F(-x, p)
    assert s1 == -s2
    if s1 != 0:
        assert l1 == pytest.approx(l2, rel=1e-12, abs=1e-12)


def test_w_and_f_logs():
    p = ModelParams(1, 1, 0.4, 0.3)
    assert weight_w(1.0, p)[1] == pytest.approx(-1 / 0.64)
    assert weight_f(1.0, p)[1] == pytest.approx(-0.3 / 0.32)


# -- kernel structure -------------------------------------------------------------

cases = [ModelParams(3, 0, 0.3, 0.4), ModelParams(3, 1, 0.3, 1.0),
         ModelParams(4, 0, 0.6, 0.0), ModelParams(2, 1, 0.5, 0.0)]


@pytest.mark.parametrize("p", cases)
def test_sum_and_cd_agree(p):
    x = np.array([0.4, -1.2, 2.1, 0.0])
    y = np.array([1.1, 0.7, -0.3, 0.9])
    a = KernelSet(p).gauged(x, y)
    b = KernelSet(p, path=KernelPath.CD, z_order=64).gauged(x, y)
    for u, v in zip(a, b):
        np.testing.assert_allclose(u, v, rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("p", cases)
def test_antisymmetry(p):
    ks = KernelSet(p)
    x = np.linspace(-2, 2, 5)
    D, S, I = ks.gauged(x[:, None], x[None, :])
    np.testing.assert_allclose(D, -D.T, atol=1e-12)
    np.testing.assert_allclose(I, -I.T, atol=1e-12)


@pytest.mark.parametrize("p", cases)
def test_raw_from_gauged(p):
    ks = KernelSet(p)
    S, D, I = ks.triple(0.3, -0.4)
    Dg, Sg, Ig = ks.gauged(0.3, -0.4)
    gx, gy = ks.log_gauge(0.3), ks.log_gauge(-0.4)
    assert S == pytest.approx(Sg * np.exp(gx - gy))
    assert D == pytest.approx(Dg * np.exp(-gx - gy))
    assert I == pytest.approx(Ig * np.exp(gx + gy))
    assert kernel_S(0.3, -0.4, p) == pytest.approx(S, rel=1e-9)
    assert kernel_D(0.3, -0.4, p) == pytest.approx(D, rel=1e-9)
    assert kernel_I(0.3, -0.4, p) == pytest.approx(I, rel=1e-9)


def test_kernels_nu1_guard():
    with pytest.raises(ValueError):
        kernels_nu1(0.1, 0.2, ModelParams(2, 0, 0.3, 0.1))
    S, D, I = kernels_nu1(0.1, 0.2, ModelParams(2, 1, 0.3, 0.1))
    assert np.isfinite(S) and np.isfinite(D) and np.isfinite(I)


@pytest.mark.parametrize("a,m", [(0.3, 0.0), (0.5, 0.7), (0.8, 1.5)])
def test_rho1_two_level_oracle(a, m):
    x = np.linspace(-3, 3, 13)
    np.testing.assert_allclose(rho1(x, ModelParams(1, 0, a, m)), rho1_two_level(x, a, m), atol=1e-9)


# -- normalisation and marginalisation ----------------------------------------------------

@pytest.mark.parametrize("p", cases + [ModelParams(8, 1, 0.2, 0.3)])
def test_normalisation(p):
    L = _half_width(p)
    tot = np.sum(gw * rho1(L * gl, p)) * L
    assert tot == pytest.approx(p.N, rel=1e-9)


@pytest.mark.parametrize("p", cases)
def test_marginalisation(p):
    L = _half_width(p)
    ks = KernelSet(p)
    y = L * gl
    for x in (-1.1, 0.2, 0.9):
        lhs = np.sum(gw * ks.rho2(x, y)) * L
        assert lhs == pytest.approx((p.N - 1) * float(ks.rho1(x)), rel=1e-8, abs=1e-12)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_rho2_symmetric(x, y):
    p = ModelParams(2, 1, 0.4, 0.5)
    assert rho2(x, y, p) == pytest.approx(rho2(y, x, p), rel=1e-9, abs=1e-12)


def test_rho_k_consistency():
    p = ModelParams(3, 1, 0.3, 0.6)
    ks = KernelSet(p)
    assert ks.rho_k([0.4]) == pytest.approx(float(ks.rho1(0.4)), rel=1e-12)
    assert ks.rho_k([0.4, -1.0]) == pytest.approx(float(ks.rho2(0.4, -1.0)), rel=1e-10)
    # permutation invariance and coincident points
    a = rho_k([0.4, -1.0, 1.3], p)
    assert rho_k([1.3, 0.4, -1.0], p) == pytest.approx(a, rel=1e-10)
    assert rho_k([0.4, 0.4, 1.3], p) == 0.0
    assert a > 0


def test_rho_k_bad_input():
    with pytest.raises(ValueError):
        KernelSet(ModelParams(2, 0, 0.3, 0.0)).rho_k([])


def test_rho1_symmetric_when_massless():
    p = ModelParams(3, 0, 0.4, 0.0)
    x = np.linspace(0.1, 3, 8)
    np.testing.assert_allclose(rho1(x, p), rho1(-x, p), rtol=1e-10)


def test_rho1_large_argument_finite():
    p = ModelParams(6, 1, 0.05, 0.2)
    v = rho1(np.array([-30.0, 30.0]), p)
    assert np.all(np.isfinite(v)) and np.all(np.abs(v) < 1e-20)


# -- chGUE limit ----------------------------------------------------------------------------

def test_chgue_density_normalised():
    y = 6.0 * (gl + 1.0)
    for n, nu in ((3, 0), (3, 1)):
        # chiral pairs +-y: the off-diagonal spectrum has 2n nonzero levels
        half = 6.0 * np.sum(gw * chgue_density_finite(y, n, nu))
        assert 2 * half == pytest.approx(2 * n, rel=1e-10)


def test_shift_map_identity_at_zero_mass():
    dens = lambda y: chgue_density_finite(y, 3, 0)
    x = np.linspace(-3, 3, 11)
    np.testing.assert_allclose(shift_map(dens, 0.0)(x), dens(x))


def test_shift_map_preserves_mass():
    dens = lambda y: chgue_density_finite(y, 3, 0)
    x = np.linspace(-12, 12, 200001)
    assert np.trapezoid(shift_map(dens, 0.7)(x), x) == pytest.approx(6.0, rel=1e-3)


@pytest.mark.parametrize("nu", [0, 1])
def test_small_a_limit(nu):
    p = ModelParams(4, nu, 1e-3, 0.4)
    x = np.concatenate([np.linspace(-3, -0.6, 13), np.linspace(0.6, 3, 13)])
    ref = shift_map(lambda y: chgue_density_finite(y, 4, nu), 0.4)(x)
    assert np.max(np.abs(rho1(x, p) - ref)) < 1e-2


def test_zero_mode_mass():
    p = ModelParams(4, 1, 0.01, 0.5)
    half = 0.3
    mass = half * np.sum(gw * rho1(-p.m + half * gl, p))
    # background: chGUE nonzero levels with x = -sqrt(y^2 + m^2) inside the window
    ytop = np.sqrt((p.m + half) ** 2 - p.m ** 2)
    yy = 0.5 * ytop * (gl + 1)
    background = 0.5 * ytop * np.sum(gw * chgue_density_finite(yy, p.n, 1))
    assert mass - background == pytest.approx(1.0, abs=5e-3)
