import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import rand_complex, rand_psd, rand_similar, schur_oracle
from posfact.core import DEFAULT_TOL, Subspace, max_angle, min_eig, norm2, range_kernel
from posfact.errors import (
    DimensionMismatch,
    Infeasible,
    InvalidPerturbation,
    NotInClass,
    NotPSD,
    RangeMismatch,
    RangeNotContained,
)
from posfact.factorization import (
    PairOrder,
    cone_minimal,
    cone_sample,
    invertible_factor_pair,
    m_decomposition,
    make_factorization,
    optimal_pair,
    pair_leq,
    psd_completion,
    schur_complement,
    sebestyen_certificate,
    sebestyen_solve,
)
from posfact.membership import is_l2p

seeds = st.integers(0, 2**32 - 1)
OBLIQUE = np.array([[1.0, 1.0], [0.0, 0.0]])
E1 = np.diag([1.0, 0.0])
J = np.ones((2, 2))


def close(X, Y, tol=1e-12):
    return norm2(np.asarray(X) - np.asarray(Y)) <= tol


def _contracts(f, T):
    assert f.residual <= DEFAULT_TOL.tol_eq * max(norm2(T), 1e-300)
    assert f.optimal == (f.range_match <= DEFAULT_TOL.tol_angle and f.kernel_match <= DEFAULT_TOL.tol_angle)


# -- optimal pairs


@pytest.mark.parametrize("form", ["range", "spectral"])
def test_optimal_pair_oblique(form):
    f = optimal_pair(OBLIQUE, form=form)
    assert close(f.A, E1) and close(f.B, J) and f.optimal


def test_optimal_pair_positive():
    T = np.diag([2.0, 3.0])
    f = optimal_pair(T)
    _contracts(f, T)
    assert f.optimal and close(f.A @ f.B, T)


def test_optimal_pair_identity():
    f = optimal_pair(np.eye(3))
    assert close(f.A, np.eye(3)) and close(f.B, np.eye(3))


def test_optimal_pair_rejects_outside():
    with pytest.raises(NotInClass):
        optimal_pair(np.array([[0.0, 1.0], [0.0, 0.0]]))


@settings(max_examples=200, deadline=None)
@given(seeds, st.integers(1, 10))
def test_optimal_pair_similarity_corpus(seed, n):
    rng = np.random.default_rng(seed)
    lams = rng.uniform(0, 3, n) * (rng.random(n) < 0.7)
    T = rand_similar(rng, lams)
    f = optimal_pair(T)
    _contracts(f, T)
    assert f.range_match <= 1e-7 and f.kernel_match <= 1e-7
    assert min_eig(f.A) >= -1e-10 * norm2(f.A) and min_eig(f.B) >= -1e-10 * norm2(f.B)


# -- Sebestyen


def test_sebestyen_oblique():
    X = sebestyen_solve(E1, OBLIQUE)
    assert close(X, J, 1e-10)


def test_sebestyen_identity():
    M = rand_psd(np.random.default_rng(0), 4)
    assert norm2(sebestyen_solve(np.eye(4), M) - M) <= 1e-10 * norm2(M)


def test_sebestyen_infeasible():
    with pytest.raises(Infeasible):
        sebestyen_solve(E1, np.diag([0.0, 1.0]))


@settings(max_examples=100, deadline=None)
@given(seeds, st.integers(1, 8))
def test_sebestyen_certificate_holds(seed, n):
    rng = np.random.default_rng(seed)
    T = rand_psd(rng, n) @ rand_psd(rng, n)
    A = optimal_pair(T).A
    X = sebestyen_solve(A, T)
    assert sebestyen_certificate(A, T, X)["ok"]


# -- cone of admissible B


def test_cone_minimal_examples():
    assert close(cone_minimal(E1, OBLIQUE), J, 1e-10)
    assert close(cone_minimal(np.eye(2), np.eye(2)), np.eye(2), 1e-10)
    assert close(cone_minimal(np.eye(2), np.diag([1.0, 0.0])), np.diag([1.0, 0.0]), 1e-10)


def test_cone_minimal_strict_range():
    with pytest.raises(RangeMismatch):
        cone_minimal(np.eye(2), np.diag([1.0, 0.0]), strict=True)


@pytest.mark.parametrize("t", [0.5, 1.0, 7.0])
def test_cone_sample_valid(t):
    s = cone_sample(E1, OBLIQUE, t * np.diag([0.0, 1.0]))
    assert close(E1 @ s.B, OBLIQUE, 1e-10)
    assert min_eig(s.B) >= -1e-12


def test_cone_sample_zero():
    assert close(cone_sample(E1, OBLIQUE, np.zeros((2, 2))).B, J, 1e-10)


def test_cone_sample_rejects_bad_range():
    with pytest.raises(InvalidPerturbation):
        cone_sample(E1, OBLIQUE, np.diag([1.0, 0.0]))


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(2, 6))
def test_cone_minimality(seed, n):
    rng = np.random.default_rng(seed)
    r = int(rng.integers(1, n))
    T = rand_psd(rng, n, r) @ rand_psd(rng, n)
    A = optimal_pair(T).A
    B0 = cone_minimal(A, T)
    _, kerTh = range_kernel(T.conj().T)
    W = kerTh.basis
    Z = W @ rand_psd(rng, W.shape[1]) @ W.conj().T
    B = cone_sample(A, T, (Z + Z.conj().T) / 2).B
    assert min_eig(B - B0) >= -1e-10 * max(norm2(B), 1.0)


# -- Schur complements


def _line(*v):
    return Subspace.span(np.array(v, dtype=complex).reshape(-1, 1))


def test_schur_rank_one():
    sp = schur_complement(J, _line(1, 0))
    assert close(sp.complement, np.zeros((2, 2)), 1e-12)
    assert close(sp.compression, J, 1e-12)


def test_schur_identity():
    sp = schur_complement(np.eye(2), _line(1, 0))
    assert close(sp.complement, np.diag([0.0, 1.0]))
    assert close(sp.compression, np.diag([1.0, 0.0]))


def test_schur_random_oracle():
    rng = np.random.default_rng(7)
    B = rand_psd(rng, 6)
    V, _ = np.linalg.qr(rand_complex(rng, 6, 2))
    sp = schur_complement(B, Subspace(6, V))
    assert norm2(sp.complement - schur_oracle(B, V)) <= 1e-9 * norm2(B)


@settings(max_examples=300, deadline=None)
@given(seeds, st.integers(1, 8))
def test_schur_contracts(seed, n):
    rng = np.random.default_rng(seed)
    B = rand_psd(rng, n)
    S = Subspace.span(rand_complex(rng, n, int(rng.integers(0, n + 1))))
    sp = schur_complement(B, S)
    nB = max(norm2(B), 1e-300)
    assert norm2(sp.complement + sp.compression - B) <= DEFAULT_TOL.tol_eq * nB
    assert min_eig(sp.complement) >= -DEFAULT_TOL.tol_psd * nB
    assert min_eig(B - sp.complement) >= -DEFAULT_TOL.tol_psd * nB
    assert norm2(S.projector() @ sp.complement) <= DEFAULT_TOL.tol_rank * nB * 10
    assert sp.contraction_norm <= 1 + DEFAULT_TOL.tol_eq


def test_schur_errors():
    with pytest.raises(NotPSD):
        schur_complement(np.diag([1.0, -1.0]), _line(1, 0))
    with pytest.raises(DimensionMismatch):
        schur_complement(np.eye(3), _line(1, 0))


# -- completion


def test_psd_completion_examples():
    assert close(psd_completion([[1.0]], [[1.0]]), [[1.0]])
    with pytest.raises(RangeNotContained):
        psd_completion([[0.0]], [[1.0]])
    assert close(psd_completion(np.eye(2), np.zeros((2, 3))), np.zeros((3, 3)))


# -- invertible B


def test_invertible_pair_oblique():
    f = invertible_factor_pair(OBLIQUE)
    assert close(f.A, E1) and close(f.B, [[1, 1], [1, 2]])
    assert abs(np.linalg.det(f.B) - 1) < 1e-12


def test_invertible_pair_examples():
    f = invertible_factor_pair(np.eye(2))
    assert close(f.A, np.eye(2)) and close(f.B, np.eye(2))
    f = invertible_factor_pair(np.diag([2.0, 0.0]))
    assert close(f.A, np.diag([2.0, 0.0])) and close(f.B, np.eye(2))


@settings(max_examples=100, deadline=None)
@given(seeds, st.integers(1, 8), st.booleans())
def test_invertible_pair_property(seed, n, balanced):
    rng = np.random.default_rng(seed)
    T = rand_psd(rng, n) @ rand_psd(rng, n, n)
    f = invertible_factor_pair(T, balanced=balanced)
    assert np.linalg.eigvalsh(f.B)[0] > 0
    assert f.residual <= DEFAULT_TOL.tol_eq * max(norm2(T), 1e-300)


# -- order on pairs


def test_pair_leq_examples():
    assert pair_leq((E1, np.eye(2)), (np.diag([2.0, 0.0]), 2 * np.eye(2))) is PairOrder.LESS
    assert pair_leq((E1, np.eye(2)), (E1, np.eye(2))) is PairOrder.EQUAL
    p = (np.diag([2.0, 1.0]), np.diag([1.0, 0.5]))
    q = (np.diag([1.0, 0.5]), np.diag([2.0, 1.0]))
    assert pair_leq(p, q) is PairOrder.INCOMPARABLE
    assert pair_leq((np.diag([2.0, 0.0]), 2 * np.eye(2)), (E1, np.eye(2))) is PairOrder.GREATER


def test_pair_leq_accepts_factorizations():
    f = optimal_pair(OBLIQUE)
    assert pair_leq(f, make_factorization(OBLIQUE, f.A, f.B)) is PairOrder.EQUAL


# -- M-decomposition


def test_m_decomposition_member():
    T = rand_similar(np.random.default_rng(11), [0.0, 1.0, 2.0])
    d = m_decomposition(T)
    assert d.M.dim == 3 and d.condition_ii
    assert close(d.T_M, T, 1e-10 * norm2(T)) and close(d.T_upper_M, T, 1e-10 * norm2(T))


def test_m_decomposition_nilpotent():
    d = m_decomposition(np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert max_angle(d.M, _line(1, 0)) < 1e-12
    assert close(d.T_M, np.zeros((2, 2))) and not d.condition_ii


def test_m_decomposition_zero():
    d = m_decomposition(np.zeros((2, 2)))
    assert d.M.dim == 2 and close(d.T_M, np.zeros((2, 2))) and d.condition_ii


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(1, 6))
def test_m_decomposition_members(seed, n):
    rng = np.random.default_rng(seed)
    T = rand_psd(rng, n) @ rand_psd(rng, n)
    d = m_decomposition(T)
    assert d.condition_ii
    assert is_l2p(d.T_M).in_l2p and is_l2p(d.T_upper_M).in_l2p
