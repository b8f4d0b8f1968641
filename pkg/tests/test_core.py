import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import rand_complex, rand_psd
from posfact.core import (
    DEFAULT_TOL,
    Subspace,
    Tolerances,
    as_matrix,
    douglas_solve,
    eig_general,
    eig_hermitian,
    eigvec_condition,
    fix_phase,
    max_angle,
    norm2,
    numerical_rank,
    pinv,
    principal_angles,
    psd_sqrt,
    range_kernel,
    subspace_ops,
)
from posfact.errors import InputError, NotHermitian, NotPSD, RangeNotContained

seeds = st.integers(0, 2**32 - 1)


def close(X, Y, tol=1e-12):
    return norm2(np.asarray(X) - np.asarray(Y)) <= tol


# -- tolerances and input handling


def test_tolerance_defaults():
    t = Tolerances()
    assert (t.tol_rank, t.tol_psd, t.tol_eq, t.tol_cluster, t.cond_max) == (1e-10, 1e-10, 1e-8, 1e-8, 1e8)
    assert t.tol_angle == 1e-7


@pytest.mark.parametrize("field", ["tol_rank", "tol_psd", "tol_eq", "cond_max"])
def test_tolerance_rejects_nonpositive(field):
    with pytest.raises(InputError):
        Tolerances().replace(**{field: 0.0})


def test_tolerance_rejects_huge_rank_tol():
    with pytest.raises(InputError):
        Tolerances(tol_rank=0.5)


@pytest.mark.parametrize("bad", [[], [[np.nan]], [[1, 2, 3]][0], [[[1]]]])
def test_as_matrix_rejects(bad):
    with pytest.raises(InputError):
        as_matrix(bad)


# -- Hermitian eigen-decomposition


def test_eig_hermitian_diagonal():
    w, V = eig_hermitian(np.diag([2.0, 1.0]))
    assert np.allclose(w, [1, 2])
    assert np.allclose(np.abs(V), [[0, 1], [1, 0]])


def test_eig_hermitian_swap():
    w, V = eig_hermitian(np.array([[0, 1], [1, 0]]))
    assert np.allclose(w, [-1, 1])
    s = 1 / np.sqrt(2)
    assert np.allclose(V, [[s, s], [-s, s]])


def test_eig_hermitian_reconstruction():
    rng = np.random.default_rng(0)
    X = rand_complex(rng, 6, 6)
    M = X + X.conj().T
    w, V = eig_hermitian(M)
    assert norm2(V @ np.diag(w) @ V.conj().T - M) <= 1e-12 * norm2(M)


def test_eig_hermitian_nonsquare():
    with pytest.raises(InputError):
        eig_hermitian(np.ones((2, 3)))


def test_fix_phase_makes_largest_entry_real_positive():
    rng = np.random.default_rng(1)
    V = fix_phase(rand_complex(rng, 4, 3))
    for j in range(3):
        k = np.argmax(np.abs(V[:, j]))
        assert V[k, j].real > 0 and abs(V[k, j].imag) < 1e-15


# -- general eigen-decomposition


def test_eig_general_nilpotent():
    rep = eig_general(np.array([[0, 1], [0, 0]]))
    (c,) = rep.clusters
    assert abs(c.eigenvalue) < 1e-12
    assert (c.algebraic_mult, c.geometric_mult) == (2, 1)
    assert not rep.diagonalizable


def test_eig_general_identity():
    rep = eig_general(np.eye(3))
    (c,) = rep.clusters
    assert np.isclose(c.eigenvalue, 1) and c.algebraic_mult == 3 and c.geometric_mult == 3
    assert rep.diagonalizable and rep.spectrum_nonneg


def test_eig_general_distinct():
    rep = eig_general(np.array([[2, 1], [0, 1]]))
    assert sorted(c.eigenvalue.real for c in rep.clusters) == pytest.approx([1, 2])
    assert rep.diagonalizable


def test_eig_general_negative():
    rep = eig_general(np.diag([-1.0, 2.0]))
    assert rep.diagonalizable and not rep.spectrum_nonneg


def test_eigvec_condition_unitary():
    assert eigvec_condition(np.diag([1.0, 2.0, 3.0])) == pytest.approx(1.0)


# -- positive square root and pseudo-inverse


def test_psd_sqrt_examples():
    assert close(psd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))
    J = np.ones((2, 2))
    assert close(psd_sqrt(J), J / np.sqrt(2))
    assert close(psd_sqrt(np.zeros((3, 3))), np.zeros((3, 3)))


def test_psd_sqrt_rejects_indefinite():
    with pytest.raises(NotPSD):
        psd_sqrt(np.diag([1.0, -1.0]))


def test_psd_sqrt_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        psd_sqrt(np.array([[1.0, 1.0], [0.0, 1.0]]))


@settings(max_examples=200, deadline=None)
@given(seeds, st.integers(1, 12))
def test_psd_sqrt_squares_back(seed, n):
    M = rand_psd(np.random.default_rng(seed), n)
    R = psd_sqrt(M)
    assert norm2(R @ R - M) <= DEFAULT_TOL.tol_eq * max(norm2(M), 1e-300)


def test_pinv_examples():
    assert close(pinv(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]))
    assert close(pinv(np.array([[1.0, 1.0], [0.0, 0.0]])), 0.5 * np.array([[1, 0], [1, 0]]))
    assert close(pinv(np.eye(3)), np.eye(3))


@settings(max_examples=100, deadline=None)
@given(seeds, st.integers(1, 8), st.integers(1, 8))
def test_pinv_involution(seed, m, n):
    rng = np.random.default_rng(seed)
    r = int(rng.integers(1, min(m, n) + 1))
    M = rand_complex(rng, m, r) @ rand_complex(rng, r, n)
    assert norm2(pinv(pinv(M)) - M) <= DEFAULT_TOL.tol_eq * norm2(M)


# -- range, kernel and subspaces


def test_range_kernel_oblique():
    ran, ker = range_kernel(np.array([[1.0, 1.0], [0.0, 0.0]]))
    assert max_angle(ran, Subspace(2, np.array([[1.0], [0.0]]))) < 1e-12
    assert max_angle(ker, Subspace(2, np.array([[1.0], [-1.0]]) / np.sqrt(2))) < 1e-12


def test_range_kernel_zero_and_unitary():
    ran, ker = range_kernel(np.zeros((3, 3)))
    assert ran.dim == 0 and ker.dim == 3
    Q, _ = np.linalg.qr(rand_complex(np.random.default_rng(2), 3, 3))
    ran, ker = range_kernel(Q)
    assert ran.dim == 3 and ker.dim == 0


@settings(max_examples=100, deadline=None)
@given(seeds, st.integers(1, 8), st.integers(1, 8))
def test_rank_of_adjoint(seed, m, n):
    rng = np.random.default_rng(seed)
    r = int(rng.integers(0, min(m, n) + 1))
    M = rand_complex(rng, m, r) @ rand_complex(rng, r, n) if r else np.zeros((m, n))
    assert numerical_rank(M) == numerical_rank(M.conj().T) == r


def _line(*v):
    return Subspace.span(np.array(v, dtype=complex).reshape(-1, 1))


def test_intersection_examples():
    e1, e2 = _line(1, 0), _line(0, 1)
    rel = subspace_ops(e1, e1)
    assert rel.intersection.dim == 1
    rel = subspace_ops(e1, e2)
    assert rel.intersection.dim == 0 and rel.principal_angles[0] == pytest.approx(np.pi / 2)
    rel = subspace_ops(e1, _line(1, 1))
    assert rel.intersection.dim == 0 and rel.principal_angles[0] == pytest.approx(np.pi / 4)


@settings(max_examples=300, deadline=None)
@given(seeds, st.integers(1, 8))
def test_dimension_formula(seed, n):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(0, n + 1))
    shared = rand_complex(rng, n, int(rng.integers(0, k + 1)))
    U = Subspace.span(np.hstack([shared, rand_complex(rng, n, int(rng.integers(0, n + 1)))]))
    V = Subspace.span(np.hstack([shared, rand_complex(rng, n, int(rng.integers(0, n + 1)))]))
    rel = subspace_ops(U, V)
    assert rel.intersection.dim + rel.sum.dim == U.dim + V.dim


def test_principal_angles_sorted():
    rng = np.random.default_rng(3)
    U = Subspace.span(rand_complex(rng, 5, 3))
    V = Subspace.span(rand_complex(rng, 5, 2))
    a = principal_angles(U, V)
    assert np.all(np.diff(a) >= 0) and np.all((a >= 0) & (a <= np.pi / 2))


# -- Douglas solve


def test_douglas_examples():
    X = douglas_solve(np.diag([1.0, 0.0]), np.diag([0.5, 0.0]))
    assert close(X, np.diag([0.5, 0.0]))
    with pytest.raises(RangeNotContained):
        douglas_solve(np.diag([1.0, 0.0]), np.array([[0.0, 0.0], [1.0, 0.0]]))
    A, T = np.ones((2, 2)), 2 * np.ones((2, 2))
    assert norm2(A @ douglas_solve(A, T) - T) <= 1e-10
