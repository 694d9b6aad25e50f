import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mlsw import SingularSystemError
from mlsw.linalg import (TridiagonalSystem, assemble_free_surface_system, assemble_vertical_matrix, column_solve,
                         thomas_solve)


def _random_dominant(rng, n):
    lower = rng.uniform(-1, 1, n)
    upper = rng.uniform(-1, 1, n)
    diag = np.abs(lower) + np.abs(upper) + rng.uniform(0.1, 2, n)
    diag *= rng.choice([-1, 1], n)
    return TridiagonalSystem(lower, diag, upper, rng.normal(size=n))


def test_identity():
    r = np.array([3.0, -1.0, 2.5])
    x = thomas_solve(TridiagonalSystem(np.zeros(3), np.ones(3), np.zeros(3), r))
    assert np.array_equal(x, r)


def test_small_example():
    x = thomas_solve(TridiagonalSystem(np.full(3, -1.0), np.full(3, 2.0), np.full(3, -1.0), np.array([1.0, 0, 1])))
    assert np.allclose(x, 1.0, atol=1e-15)


def test_single_row():
    x = thomas_solve(TridiagonalSystem(np.zeros(1), np.array([4.0]), np.zeros(1), np.array([2.0])))
    assert x[0] == 0.5


def test_zero_pivot():
    with pytest.raises(SingularSystemError):
        thomas_solve(TridiagonalSystem(np.zeros(2), np.array([0.0, 1.0]), np.zeros(2), np.ones(2)))
    # second pivot vanishes: [[1, 1], [1, 1]]
    with pytest.raises(SingularSystemError):
        thomas_solve(TridiagonalSystem(np.ones(2), np.ones(2), np.ones(2), np.ones(2)))


def test_band_length_mismatch():
    with pytest.raises(ValueError):
        thomas_solve(TridiagonalSystem(np.zeros(2), np.ones(3), np.zeros(3), np.ones(3)))


@given(st.integers(0, 2**32 - 1))
def test_thomas_matches_dense_8x8(seed):
    sys = _random_dominant(np.random.default_rng(seed), 8)
    x = thomas_solve(sys)
    ref = np.linalg.solve(sys.dense(), sys.rhs)
    assert np.max(np.abs(x - ref)) <= 1e-10 * max(1.0, np.max(np.abs(ref)))


@given(st.integers(1, 40), st.integers(0, 2**32 - 1))
def test_thomas_residual(n, seed):
    sys = _random_dominant(np.random.default_rng(seed), n)
    assert sys.residual(thomas_solve(sys)) < 1e-12 * (1 + np.max(np.abs(sys.rhs)))


# ---------------------------------------------------------------- vertical system


def test_vertical_uncoupled():
    l = np.array([0.2, 0.3, 0.5])
    sys = assemble_vertical_matrix(4.0, l, np.zeros(4), 0.0, 0.0, 0.7, R_col=[1.0, -2.0, 3.0])
    assert np.allclose(sys.diag, l * 4.0) and not sys.lower.any() and not sys.upper.any()
    assert np.allclose(thomas_solve(sys), [1.0, -2.0, 3.0], atol=1e-15)


def test_vertical_single_layer():
    sys = assemble_vertical_matrix(5.0, [1.0], np.zeros(2), 0.003, 0.0, 2.0)
    assert sys.diag[0] == pytest.approx(5.0 + 2.0 * 0.003)


@given(st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_vertical_dominance(n, seed):
    rng = np.random.default_rng(seed)
    l = rng.uniform(0.1, 1, n)
    l /= l.sum()
    sys = assemble_vertical_matrix(rng.uniform(0.5, 50), l, rng.uniform(0, 5, n + 1), rng.uniform(0, 1),
                                   rng.uniform(0, 1), rng.uniform(0, 100))
    assert np.all(sys.dominance_margin() >= -1e-12)
    assert np.all(sys.diag > 0)
    A = sys.dense()
    assert np.allclose(A, A.T, rtol=0, atol=1e-13)


def test_column_solve_matches_assembly():
    rng = np.random.default_rng(3)
    n, ne = 4, 3
    l = np.array([0.1, 0.2, 0.3, 0.4])
    l_edge = np.tile(l[:, None], (1, ne))
    n_edge = np.full(ne, n)
    he = rng.uniform(1, 10, ne)
    cvis = np.zeros((n + 1, ne))
    cvis[1:n] = rng.uniform(0, 2, (n - 1, ne))
    cfu, cwt = rng.uniform(0, 1, ne), rng.uniform(0, 1, ne)
    R = rng.normal(size=(n, ne))
    X, Y = np.zeros((n, ne)), np.zeros((n, ne))
    Sx, T = np.zeros(ne), np.zeros(ne)
    w, uw = 0.8, -1.0
    assert column_solve(he, cvis, cfu, cwt, uw, w, R, n_edge, l_edge, X, Y, Sx, T, 0, ne - 1) == 0
    for e in range(ne):
        sys = assemble_vertical_matrix(he[e], l, cvis[:, e], cfu[e], cwt[e], w, R[:, e], uw)
        x = thomas_solve(sys)
        assert np.allclose(X[:, e], x, rtol=1e-13, atol=1e-14)
        y = np.linalg.solve(sys.dense(), l * he[e])
        assert np.allclose(Y[:, e], y, rtol=1e-13)
        assert Sx[e] == pytest.approx(np.dot(l * he[e], x), rel=1e-13)
        assert T[e] == pytest.approx(np.dot(l * he[e], y), rel=1e-13)


# ---------------------------------------------------------------- free-surface system


def _fs_inputs(rng, M):
    dx = rng.uniform(0.5, 2, M)
    dx_edge = rng.uniform(0.5, 2, M + 1)
    T = rng.uniform(0.1, 10, M + 1)
    T[0] = T[-1] = 0.0
    Sx = rng.normal(size=M + 1)
    return dx, dx_edge, T, Sx


@given(st.integers(3, 30), st.integers(0, 2**32 - 1), st.sampled_from([(None, None), (1.5, None), (None, -2.0),
                                                                        (0.5, 0.7)]))
def test_free_surface_symmetric(M, seed, dirichlet):
    rng = np.random.default_rng(seed)
    dx, dx_edge, T, Sx = _fs_inputs(rng, M)
    sys = assemble_free_surface_system(dx, dx_edge, T, Sx, rng.uniform(1, 100), 9.81, rng.normal(size=M), dirichlet)
    A = sys.dense()
    assert np.max(np.abs(A - A.T)) <= 1e-13 * np.max(np.abs(A))
    assert np.all(sys.dominance_margin() >= -1e-9 * np.abs(sys.diag))


def test_free_surface_zero_step():
    rng = np.random.default_rng(0)
    dx, dx_edge, T, Sx = _fs_inputs(rng, 6)
    eta = rng.normal(size=6)
    sys = assemble_free_surface_system(dx, dx_edge, T, Sx, 0.0, 9.81, dx * eta)
    assert np.allclose(thomas_solve(sys), eta, rtol=1e-15, atol=1e-15)


def test_free_surface_rest_state():
    rng = np.random.default_rng(5)
    dx, dx_edge, T, _ = _fs_inputs(rng, 8)
    eta = 3.25
    # flat surface and no flux: the solve returns the flat surface
    sys = assemble_free_surface_system(dx, dx_edge, T, np.zeros(9), 25.0, 9.81, dx * eta)
    assert np.max(np.abs(thomas_solve(sys) - eta)) < 1e-12


def test_free_surface_dirichlet_rows():
    rng = np.random.default_rng(2)
    dx, dx_edge, T, Sx = _fs_inputs(rng, 5)
    sys = assemble_free_surface_system(dx, dx_edge, T, Sx, 3.0, 9.81, rng.normal(size=5), (1.0, 2.0))
    x = thomas_solve(sys)
    assert x[0] == 1.0 and x[-1] == 2.0
