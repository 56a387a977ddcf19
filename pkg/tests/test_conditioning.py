import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import eig_jtj
from srcond.conditioning import EPS, analyze, condition_numbers, numeric_rank, singular_values

METHODS = ("jacobi", "gesdd")


def well_conditioned(seed, n=8, k=4):
    rng = np.random.default_rng(seed)
    U, _ = np.linalg.qr(rng.normal(size=(n, k)))
    V, _ = np.linalg.qr(rng.normal(size=(k, k)))
    s = np.sort(rng.uniform(1.0, 10.0, k))[::-1]
    return U @ np.diag(s) @ V.T


def test_diag():
    for m in METHODS:
        np.testing.assert_allclose(singular_values(np.diag([3.0, 4.0]), m), [4.0, 3.0], rtol=1e-15)


def test_eig_oracle_fixtures():
    np.testing.assert_allclose(eig_jtj(np.diag([3.0, 4.0])), [4.0, 3.0], rtol=1e-14)
    A = np.array([[1.0, 1.0], [2.0, 2.0], [0.0, 0.0]])
    assert eig_jtj(A)[1] < 1e-7


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(METHODS))
def test_matches_oracle_on_random_matrices(seed, method):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(8, 4))
    got = singular_values(A, method)
    want = eig_jtj(A)
    keep = want > 1e-8 * want[0]
    np.testing.assert_allclose(got[keep], want[keep], rtol=1e-10)


@pytest.mark.parametrize("method", METHODS)
def test_duplicated_column_rank(method, rng):
    A = rng.normal(size=(20, 4))
    A[:, 3] = A[:, 1]
    rep = analyze(A, method)
    assert (rep.k, rep.r, rep.redundant) == (4, 3, 1)


@pytest.mark.parametrize("method", METHODS)
def test_scaled_duplicate_and_zero_column(method, rng):
    A = rng.normal(size=(20, 5))
    A[:, 4] = -3.0 * A[:, 0]
    A[:, 2] = 0.0
    rep = analyze(A, method)
    assert rep.r == 3
    assert rep.kappa == math.inf or rep.kappa > 1e14
    assert math.isfinite(rep.kappa_r)


@pytest.mark.parametrize("method", METHODS)
def test_threshold_straddle(method):
    k = 4
    tol = k * EPS
    A = np.zeros((6, k))
    np.fill_diagonal(A, [1.0, 1e-3, 1.05 * tol, 0.95 * tol])
    rep = analyze(A, method)
    assert rep.r == 3
    assert rep.tolerance == pytest.approx(tol, rel=1e-12)
    assert rep.kappa_r == pytest.approx(1.0 / (1.05 * tol), rel=1e-8)
    assert rep.kappa == pytest.approx(1.0 / (0.95 * tol), rel=1e-8)


def test_full_rank_kappas_equal():
    rep = analyze(well_conditioned(3))
    assert rep.r == rep.k == 4
    assert rep.kappa == rep.kappa_r


def test_jacobi_keeps_tiny_singular_values_accurate():
    # graded columns: the one-sided Jacobi route resolves the small values to
    # high relative accuracy, well below the absolute error of a bidiagonal SVD
    rng = np.random.default_rng(7)
    B = rng.normal(size=(30, 4))
    D = np.diag([1.0, 1e-6, 1e-12, 1e-18])
    A = B @ D
    s = singular_values(A, "jacobi")
    assert 1e-20 < s[-1] < 1e-16  # nonzero and of the order of the column scale
    assert 1e-14 < s[-2] < 1e-10
    assert analyze(A, "jacobi").r == 3


def test_wide_matrix_padded_with_zeros(rng):
    A = rng.normal(size=(2, 5))
    for m in METHODS:
        s = singular_values(A, m)
        assert len(s) == 5
        np.testing.assert_array_equal(s[2:], 0.0)
        assert analyze(A, m).r == 2


def test_degenerate_inputs():
    assert len(singular_values(np.zeros((3, 0)))) == 0
    np.testing.assert_array_equal(singular_values(np.zeros((4, 3))), 0.0)
    rep = analyze(np.zeros((4, 3)))
    assert rep.r == 0 and rep.kappa == math.inf and rep.kappa_r == math.inf
    with pytest.raises(ValueError):
        singular_values(np.array([[1.0, np.nan]]))
    with pytest.raises(ValueError):
        singular_values(np.ones(3))
    with pytest.raises(ValueError):
        singular_values(np.eye(2), "qr")


def test_rank_and_condition_helpers():
    assert numeric_rank([]) == 0
    assert numeric_rank([0.0, 0.0]) == 0
    assert numeric_rank([2.0, 1.0, 0.0]) == 2
    assert condition_numbers([4.0, 2.0, 0.0], 2) == (math.inf, 2.0)
    assert condition_numbers([4.0, 2.0], 2) == (2.0, 2.0)
    assert condition_numbers([1.0], 0) == (math.inf, math.inf)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_invariants(seed):
    rng = np.random.default_rng(seed)
    n, k = rng.integers(1, 12, size=2)
    A = rng.normal(size=(n, k)) * rng.choice([1.0, 1e-9, 0.0], size=k)
    rep = analyze(A)
    assert np.all(np.diff(rep.sigma) <= 0)
    assert 0 <= rep.r <= min(n, k)
    if rep.r:
        assert 1.0 <= rep.kappa_r <= rep.kappa
