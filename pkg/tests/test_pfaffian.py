import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import pfaffian_expansion
from wilsonrmt.pfaffian import pfaffian, pfaffian_bordered


def _antisym(rng, n, batch=()):
    A = rng.standard_normal(batch + (n, n))
    return A - np.swapaxes(A, -1, -2)


def _value(A):
    s, l = pfaffian(A)
    return s * np.exp(l)


def test_two_by_two():
    assert _value([[0.0, 3.5], [-3.5, 0.0]]) == pytest.approx(3.5)
    assert _value([[0.0, -2.0], [2.0, 0.0]]) == pytest.approx(-2.0)


def test_empty_and_odd():
    assert pfaffian(np.zeros((0, 0))) == (1.0, 0.0)
    assert pfaffian(np.zeros((3, 3)))[0] == 0.0
    with pytest.raises(ValueError):
        pfaffian(np.zeros((2, 3)))


@pytest.mark.parametrize("n", [2, 4, 6, 8])
def test_against_expansion(n):
    rng = np.random.default_rng(n)
    for _ in range(5):
        A = _antisym(rng, n)
        assert _value(A) == pytest.approx(pfaffian_expansion(A), rel=1e-11)


@pytest.mark.parametrize("n", [2, 8, 32, 64])
def test_square_is_det(n):
    A = _antisym(np.random.default_rng(100 + n), n)
    s, l = pfaffian(A)
    sd, ld = np.linalg.slogdet(A)
    assert sd > 0 and 2 * l == pytest.approx(ld, abs=1e-10)


@given(st.integers(1, 5), st.integers(0, 2 ** 32 - 1))
def test_congruence(k, seed):
    # Pf(B A B^T) = det(B) Pf(A)
    rng = np.random.default_rng(seed)
    A = _antisym(rng, 2 * k)
    B = rng.standard_normal((2 * k, 2 * k))
    lhs = _value(B @ A @ B.T)
    rhs = np.linalg.det(B) * _value(A)
    assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-10 * np.abs(rhs).max(initial=1.0))


def test_block_diagonal_product():
    rng = np.random.default_rng(7)
    A, B = _antisym(rng, 4), _antisym(rng, 6)
    C = np.zeros((10, 10))
    C[:4, :4], C[4:, 4:] = A, B
    assert _value(C) == pytest.approx(_value(A) * _value(B), rel=1e-12)


def test_structural_zero():
    A = _antisym(np.random.default_rng(3), 6)
    A[2, :] = 0.0
    A[:, 2] = 0.0
    assert pfaffian(A) == (0.0, -np.inf)


def test_batched_matches_loop():
    rng = np.random.default_rng(11)
    A = _antisym(rng, 6, (3, 4))
    s, l = pfaffian(A)
    assert s.shape == (3, 4)
    for i in range(3):
        for j in range(4):
            si, li = pfaffian(A[i, j])
            assert si == s[i, j] and li == pytest.approx(l[i, j], abs=1e-13)


def test_scale_invariance_log():
    A = _antisym(np.random.default_rng(5), 8)
    s1, l1 = pfaffian(A)
    s2, l2 = pfaffian(A * 1e150)
    assert s1 == s2 and l2 == pytest.approx(l1 + 4 * np.log(1e150), rel=1e-12)


def test_bordered():
    rng = np.random.default_rng(9)
    F = _antisym(rng, 3)
    b = rng.standard_normal(3)
    full = np.zeros((4, 4))
    full[:3, :3], full[:3, 3], full[3, :3] = F, b, -b
    s, l = pfaffian_bordered(F, b)
    assert s * np.exp(l) == pytest.approx(pfaffian_expansion(full), rel=1e-12)
    with pytest.raises(ValueError):
        pfaffian_bordered(_antisym(rng, 4), rng.standard_normal(4))
    with pytest.raises(ValueError):
        pfaffian_bordered(_antisym(rng, 4), rng.standard_normal((3, 1)))
