from math import lgamma, log, pi, sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import iv

from wilsonrmt.kernels import KernelSet
from wilsonrmt.microscopic import (chgue_density_micro, limit_poly_even, limit_poly_odd,
                                   micro_convergence_check, partition_nf1_micro, rho_s,
                                   rho_s_nu1, rho_s_nu1_zero_mode)
from wilsonrmt.sop import MicroParams, r_even, r_odd


@pytest.mark.parametrize("t", [0.5, 1.0])
@pytest.mark.parametrize("xh", [0.7, 2.5])
def test_limit_polynomials_first_order_convergence(t, xh):
    mp = MicroParams(1.0, 0.2)
    le, lo = limit_poly_even(t, xh, mp), limit_poly_odd(t, xh, mp)
    errs = []
    for n in (16, 32, 64):
        p = mp.finite(n)
        j = int(t * n)
        f = (-1) ** j * np.exp(-(j * log(2) + lgamma(j + 1)))
        x = xh / sqrt(2 * n)
        errs.append((f * r_even(j, x, p) - le, sqrt(2 * n) * f * r_odd(j, x, p) - lo))
    errs = np.abs(np.array(errs))
    assert np.all(errs[-1] < 1e-2)
    np.testing.assert_allclose(errs[1] / errs[2], 2.0, rtol=0.05)


def test_limit_poly_at_t0():
    mp = MicroParams(0.5, 0.3)
    assert limit_poly_even(0.0, 1.2, mp) == pytest.approx(1.0, abs=1e-14)
    assert limit_poly_odd(0.0, 1.2, mp) == pytest.approx(1.2, abs=1e-13)


@pytest.mark.parametrize("mh,ah", [(0.0, 0.1), (1.0, 0.1), (3.0, 0.25), (1.5, 0.5)])
def test_rho_s_two_forms(mh, ah):
    mp = MicroParams(mh, ah)
    x = np.array([-4.0, -1.1, 0.3, 0.9, 2.2, 5.0])
    np.testing.assert_allclose(rho_s(x, mp, form="cd"), rho_s(x, mp, form="t"), atol=1e-10)


def test_rho_s_bad_args():
    with pytest.raises(ValueError):
        rho_s(1.0, MicroParams(1.0, 0.0))
    with pytest.raises(ValueError):
        rho_s(1.0, MicroParams(1.0, 0.1), form="x")
    with pytest.raises(ValueError):
        rho_s_nu1(1.0, MicroParams(1.0, 0.0, nu=1))


@settings(max_examples=10)
@given(st.floats(0.05, 0.4), st.floats(0.1, 5.0))
def test_rho_s_even_when_massless(ah, x):
    mp = MicroParams(0.0, ah)
    assert rho_s(x, mp) == pytest.approx(rho_s(-x, mp), rel=1e-9, abs=1e-12)


def test_chgue_micro_plateau():
    # 1/pi plateau of the microscopic Bessel density
    x = np.linspace(200, 400, 20001)
    for nu in (0, 1):
        assert np.mean(chgue_density_micro(x, nu)) == pytest.approx(1 / pi, rel=1e-3)
    with pytest.raises(ValueError):
        chgue_density_micro(1.0, 2)


def test_bessel_degeneration():
    mp = MicroParams(1.0, 1e-3)
    x = np.linspace(1.3, 8.0, 15)
    y = np.sqrt(x * x - 1.0)
    ref = chgue_density_micro(y, 0) * x / y
    assert np.max(np.abs(rho_s(x, mp) - ref)) < 5e-3


@pytest.mark.parametrize("ah", [0.02, 0.05, 0.1])
def test_zero_mode_mass(ah):
    mp = MicroParams(0.0, ah, nu=1)
    half = 24.0 * ah
    g, w = np.polynomial.legendre.leggauss(200)
    mass = half * np.sum(w * rho_s_nu1_zero_mode(-mp.m_hat + half * g, mp))
    assert mass == pytest.approx(1.0, abs=2e-2)


def test_nu1_matches_finite_n():
    mp = MicroParams(1.0, 0.1, nu=1)
    x = np.linspace(-3, 3, 25)
    n = 16
    sc = sqrt(2 * n)
    finite = KernelSet(mp.finite(n)).rho1(x / sc) / sc
    assert np.max(np.abs(finite - rho_s_nu1(x, mp))) < 2e-2


def test_convergence_report_small():
    rep = micro_convergence_check(MicroParams(1.0, 0.1), ns=(4, 8), grid=np.linspace(-3, 3, 13))
    assert len(rep.distances) == 2 and rep.monotone
    assert rep.limit_values.shape == (13,)


# -- partition function -------------------------------------------------------------------

@pytest.mark.parametrize("nu", [0, 1, 2])
@pytest.mark.parametrize("mh", [0.0, 0.8, 3.0])
def test_partition_a0_is_bessel(nu, mh):
    res = partition_nf1_micro(MicroParams(mh, 0.0, 0.0, nu))
    assert res.theta_form == pytest.approx(iv(nu, mh), rel=1e-12, abs=1e-15)
    assert res.hermite_form == pytest.approx(iv(nu, mh), rel=1e-12, abs=1e-15)


@settings(max_examples=20)
@given(st.floats(0, 3), st.floats(0.01, 0.3), st.floats(0, 2), st.integers(0, 1))
def test_partition_forms_agree(mh, ah, zh, nu):
    assert partition_nf1_micro(MicroParams(mh, ah, zh, nu)).ok


def test_partition_exact_zero():
    res = partition_nf1_micro(MicroParams(0.0, 0.2, 0.0, 1))
    assert abs(res.theta_form) < 1e-14 and abs(res.hermite_form) < 1e-14 and res.ok
