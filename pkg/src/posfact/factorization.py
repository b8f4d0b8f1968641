"""Factorizations ``T = A B`` with ``A, B`` positive.

Includes optimal pairs, the positive solution of ``A X = T``, the cone of
such solutions, Schur complements / minimal PSD completions, and the
decomposition of an arbitrary matrix along ``ran T + ker T``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DEFAULT_TOL,
    Subspace,
    Tolerances,
    as_matrix,
    as_square,
    douglas_solve,
    hermitian_part,
    max_angle,
    min_eig,
    norm2,
    psd_pinv_sqrt,
    psd_sqrt,
    range_kernel,
    subspace_sum,
)
from .errors import (
    CertificateError,
    DimensionMismatch,
    InvalidPerturbation,
    NotHermitian,
    NotPSD,
    RangeMismatch,
)
from .membership import feasibility_lambda, is_l2p, member_spectrum


@dataclass(frozen=True)
class Factorization:
    """Certified pair ``(A, B)`` of positive matrices with ``A B = T``."""

    A: np.ndarray = field(repr=False)
    B: np.ndarray = field(repr=False)
    residual: float
    optimal: bool
    range_match: float
    kernel_match: float


def _herm(M):
    return 0.5 * (M + M.conj().T)


def make_factorization(T, A, B, tol: Tolerances = DEFAULT_TOL) -> Factorization:
    """Certify ``A B = T`` and measure optimality.

    Raises :class:`CertificateError` if the product misses ``T`` by more than
    ``tol_eq * ||T||``.
    """
    T = as_square(T)
    A = hermitian_part(A, tol, check=False)
    B = hermitian_part(B, tol, check=False)
    if A.shape != T.shape or B.shape != T.shape:
        raise DimensionMismatch("factor shapes do not match T")
    resid = norm2(A @ B - T)
    bound = tol.tol_eq * norm2(T)
    if resid > bound:
        raise CertificateError(f"||AB - T|| = {resid:.3e} exceeds {bound:.3e}")
    ranA, _ = range_kernel(A, tol)
    ranT, kerT = range_kernel(T, tol)
    _, kerB = range_kernel(B, tol)
    rm = max_angle(ranA, ranT)
    km = max_angle(kerB, kerT)
    return Factorization(
        A=A, B=B, residual=resid,
        optimal=bool(rm <= tol.tol_angle and km <= tol.tol_angle),
        range_match=rm, kernel_match=km,
    )


def optimal_pair(T, tol: Tolerances = DEFAULT_TOL, form: str = "range") -> Factorization:
    """Optimal pair from the diagonalization ``T G = G C``.

    ``form="range"`` gives ``A = G P G^H, B = G^{-H} C G^{-1}`` where ``P``
    projects onto ``ran C``.  ``form="spectral"`` swaps the roles:
    ``A = G C G^H, B = G^{-H} P G^{-1}``.  Both are optimal.
    """
    ms = member_spectrum(T, tol)
    G, Gi, c = ms.G, ms.Ginv, ms.values
    p = (c > 0).astype(float)
    if form == "range":
        a, b = p, c
    elif form == "spectral":
        a, b = c, p
    else:
        raise ValueError(f"unknown form {form!r}")
    A = (G * a) @ G.conj().T
    B = (Gi.conj().T * b) @ Gi
    return make_factorization(T, _herm(A), _herm(B), tol)


def invertible_factor_pair(T, tol: Tolerances = DEFAULT_TOL, balanced: bool = False) -> Factorization:
    """Pair ``(A, B)`` with ``B`` invertible.

    By default ``B = B' + P_{ker A}`` where ``(A, B')`` is the optimal pair
    with ``A = G C G^H``; ``B`` must clear ``tol_psd * ||B||``.

    With ``balanced`` the pair is ``A = G C G^H, B = (G G^H)^{-1}``, whose
    condition number ``cond(G)^2`` is the least any invertible ``B`` can
    have up to the choice of unit columns.  Invertibility is then certified
    by ``cond(G) <= cond_max`` instead of the eigenvalue floor.
    """
    T = as_square(T)
    if balanced:
        ms = member_spectrum(T, tol)
        A = (ms.G * ms.values) @ ms.G.conj().T
        B = ms.Ginv.conj().T @ ms.Ginv
        return make_factorization(T, A, B, tol)
    opt = optimal_pair(T, tol, form="spectral")
    _, kerA = range_kernel(opt.A, tol)
    B = opt.B + kerA.projector()
    f = make_factorization(T, opt.A, B, tol)
    lo = min_eig(f.B)
    if lo <= tol.tol_psd * norm2(f.B):
        raise CertificateError(f"B is not invertible (min eigenvalue {lo:.3e})")
    return f


# ---------------------------------------------------------------------------
# Sebestyen equation A X = T


def sebestyen_solve(A, T, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Positive ``X`` with ``A X = T`` and ``ker X = ker T``.

    Built as ``X = G^H G`` where ``T = (T A^H)^{1/2} G``.  Raises
    :class:`~posfact.errors.Infeasible` when no positive solution exists and
    :class:`CertificateError` if the result misses its guarantees.
    """
    A = hermitian_part(A, tol)
    T = as_matrix(T)
    feasibility_lambda(A, T, tol)
    S = _herm(T @ A.conj().T)
    R = psd_sqrt(S, tol)
    G = douglas_solve(R, T, tol)
    X = _herm(G.conj().T @ G)
    cert = sebestyen_certificate(A, T, X, tol)
    if not cert["ok"]:
        raise CertificateError(f"solution failed its certificate: {cert}")
    return X


def sebestyen_certificate(A, T, X, tol: Tolerances = DEFAULT_TOL) -> dict:
    """Residual, kernel angle and Schur-complement norm for a solution ``X``."""
    A = as_matrix(A)
    T = as_matrix(T)
    X = as_matrix(X)
    nX = norm2(X)
    scale = max(norm2(T), norm2(A) * nX)
    resid = norm2(A @ X - T)
    ranT, kerT = range_kernel(T, tol)
    _, kerX = range_kernel(X, tol)
    kang = max_angle(kerX, kerT)
    comp = norm2(schur_complement(X, ranT, tol).complement) if nX > 0 else 0.0
    ok = resid <= tol.tol_eq * scale and kang <= tol.tol_angle and comp <= tol.tol_eq * nX
    return {
        "residual": resid,
        "residual_tol": tol.tol_eq * scale,
        "kernel_angle": kang,
        "kernel_angle_tol": tol.tol_angle,
        "schur_complement": comp,
        "schur_complement_tol": tol.tol_eq * nX,
        "ok": bool(ok),
    }


def cone_minimal(A, T, tol: Tolerances = DEFAULT_TOL, strict: bool = False) -> np.ndarray:
    """Minimum of the cone of positive solutions of ``A B = T``.

    With ``strict`` the call also insists that ``ran A = ran T``.  The
    returned ``B0`` is certified to be the minimal completion of its
    ``ran T`` rows, i.e. its Schur complement to ``ran T`` vanishes.
    """
    A = hermitian_part(A, tol)
    T = as_matrix(T)
    if strict:
        ranA, _ = range_kernel(A, tol)
        ranT, _ = range_kernel(T, tol)
        ang = max_angle(ranA, ranT)
        if ang > tol.tol_angle:
            raise RangeMismatch(f"ran A differs from ran T (angle {ang:.3e})")
    # sebestyen_solve already certifies the vanishing complement
    return sebestyen_solve(A, T, tol)


@dataclass(frozen=True)
class ConeSample:
    B: np.ndarray = field(repr=False)
    optimal: bool


def cone_sample(A, T, Z, tol: Tolerances = DEFAULT_TOL) -> ConeSample:
    """``B0 + Z`` for an admissible perturbation ``Z``.

    ``Z`` must be positive with ``ran Z`` inside ``ker T^H`` (and annihilated
    by ``A``).  ``optimal`` reports whether ``(A, B0 + Z)`` is still optimal,
    which happens exactly when ``ran Z`` also lies in ``ran T^H``.
    """
    A = hermitian_part(A, tol)
    T = as_square(T)
    try:
        Z = hermitian_part(Z, tol)
    except NotHermitian as exc:
        raise InvalidPerturbation(str(exc)) from None
    if Z.shape != T.shape:
        raise DimensionMismatch(f"Z is {Z.shape}, T is {T.shape}")
    nZ = norm2(Z)
    if min_eig(Z) < -tol.tol_psd * nZ:
        raise InvalidPerturbation("Z is not positive semidefinite")
    B0 = cone_minimal(A, T, tol)
    if nZ == 0:
        return ConeSample(B=B0, optimal=make_factorization(T, A, B0, tol).optimal)
    ranZ, _ = range_kernel(Z, tol)
    _, kerTh = range_kernel(T.conj().T, tol)
    if not kerTh.contains(ranZ, tol):
        raise InvalidPerturbation("ran Z is not contained in ker T^H")
    if norm2(A @ Z) > tol.tol_eq * max(norm2(A) * nZ, norm2(T)):
        raise InvalidPerturbation("A does not annihilate Z")
    B = _herm(B0 + Z)
    f = make_factorization(T, A, B, tol)
    return ConeSample(B=B, optimal=f.optimal)


# ---------------------------------------------------------------------------
# Schur complements and completions


@dataclass(frozen=True)
class SchurPair:
    """``B = compression + complement`` relative to a subspace ``S``.

    ``complement`` is the largest positive matrix below ``B`` with range in
    the orthogonal complement of ``S``.
    """

    complement: np.ndarray = field(repr=False)
    compression: np.ndarray = field(repr=False)
    contraction_norm: float


def schur_complement(B, S: Subspace, tol: Tolerances = DEFAULT_TOL) -> SchurPair:
    """Schur complement of ``B`` to ``S`` through the contraction ``F``.

    In the basis ``S ⊕ S^⊥`` write ``B12 = B11^{1/2} F B22^{1/2}``; then the
    complement is ``B22^{1/2} (1 - F^H F) B22^{1/2}`` in the ``S^⊥`` corner.
    """
    B = hermitian_part(B, tol)
    n = B.shape[0]
    if S.ambient_dim != n:
        raise DimensionMismatch(f"subspace lives in C^{S.ambient_dim}, B is {n}x{n}")
    nB = norm2(B)
    if min_eig(B) < -tol.tol_psd * nB:
        raise NotPSD("B is not positive semidefinite")
    U1 = S.basis
    U2 = S.complement().basis
    if U2.shape[1] == 0:
        return SchurPair(np.zeros_like(B), B.copy(), 0.0)
    B22 = U2.conj().T @ B @ U2
    if U1.shape[1] == 0:
        return SchurPair(B.copy(), np.zeros_like(B), 0.0)
    B11 = U1.conj().T @ B @ U1
    B12 = U1.conj().T @ B @ U2
    F = psd_pinv_sqrt(B11, tol) @ B12 @ psd_pinv_sqrt(B22, tol)
    R22 = psd_sqrt(B22, tol)
    k = F.shape[1]
    C22 = R22 @ (np.eye(k) - F.conj().T @ F) @ R22
    comp = _herm(U2 @ C22 @ U2.conj().T)
    return SchurPair(complement=comp, compression=_herm(B - comp), contraction_norm=norm2(F))


def classical_schur_complement(B, S: Subspace, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """``B22 - B12^H B11^+ B12`` embedded in the ``S^⊥`` corner."""
    from .core import pinv

    B = hermitian_part(B, tol)
    U1 = S.basis
    U2 = S.complement().basis
    B11 = U1.conj().T @ B @ U1
    B12 = U1.conj().T @ B @ U2
    B22 = U2.conj().T @ B @ U2
    C = B22 - B12.conj().T @ pinv(B11, tol) @ B12 if U1.shape[1] else B22
    return _herm(U2 @ C @ U2.conj().T)


def psd_completion(B11, B12, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Smallest ``B22`` making ``[[B11, B12], [B12^H, B22]]`` positive.

    Raises :class:`~posfact.errors.RangeNotContained` when ``ran B12`` leaves
    ``ran B11``, in which case no completion exists.
    """
    B11 = hermitian_part(B11, tol)
    B12 = as_matrix(B12)
    if B12.shape[0] != B11.shape[0]:
        raise DimensionMismatch(f"B11 is {B11.shape}, B12 is {B12.shape}")
    if min_eig(B11) < -tol.tol_psd * norm2(B11):
        raise NotPSD("B11 is not positive semidefinite")
    G = douglas_solve(psd_sqrt(B11, tol), B12, tol)
    return _herm(G.conj().T @ G)


# ---------------------------------------------------------------------------
# order on pairs


class PairOrder(str, enum.Enum):
    LESS = "Less"
    GREATER = "Greater"
    EQUAL = "Equal"
    INCOMPARABLE = "Incomparable"


def _pair(p):
    if isinstance(p, Factorization):
        return p.A, p.B
    A, B = p
    return as_matrix(A), as_matrix(B)


def pair_leq(p, q, tol: Tolerances = DEFAULT_TOL) -> PairOrder:
    """Compare two pairs in the componentwise Loewner order."""
    pA, pB = _pair(p)
    qA, qB = _pair(q)
    if pA.shape != qA.shape or pB.shape != qB.shape:
        raise DimensionMismatch("pairs have different dimensions")
    scale = max(norm2(pA), norm2(pB), norm2(qA), norm2(qB), 1e-300)
    dA = _herm(qA - pA)
    dB = _herm(qB - pB)
    if norm2(dA) <= tol.tol_eq * scale and norm2(dB) <= tol.tol_eq * scale:
        return PairOrder.EQUAL
    floor = -tol.tol_psd * scale
    if min_eig(dA) >= floor and min_eig(dB) >= floor:
        return PairOrder.LESS
    if min_eig(-dA) >= floor and min_eig(-dB) >= floor:
        return PairOrder.GREATER
    return PairOrder.INCOMPARABLE


# ---------------------------------------------------------------------------
# decomposition along ran T + ker T


@dataclass(frozen=True)
class MDecomposition:
    M: Subspace
    T_M: np.ndarray = field(repr=False)
    T_upper_M: np.ndarray | None = field(repr=False)
    condition_ii: bool
    witness: Factorization | None = field(repr=False, default=None)


def m_decomposition(T, tol: Tolerances = DEFAULT_TOL) -> MDecomposition:
    """Split ``T`` along ``M = ran T + ker T``.

    ``T_M = T P_M`` always.  For members, ``T^M = T + P_{M^⊥} B`` is formed
    from the optimal pair ``(A, B)``; it satisfies ``T = P_M T^M``.
    ``condition_ii`` holds when ``T_M`` is a member and ``ran T`` lies in
    ``ran A B^{1/2}``.
    """
    T = as_square(T)
    n = T.shape[0]
    ranT, kerT = range_kernel(T, tol)
    M = subspace_sum(ranT, kerT, tol)
    PM = M.projector()
    T_M = T @ PM
    verdict = is_l2p(T, tol)
    if not verdict.in_l2p:
        return MDecomposition(M=M, T_M=T_M, T_upper_M=None, condition_ii=False)
    f = verdict.witness
    Pc = np.eye(n) - PM
    T_up = T + Pc @ f.B
    scale = max(norm2(T), 1e-300)
    if norm2(PM @ T_up - T) > tol.tol_eq * scale:
        raise CertificateError("P_M T^M does not reproduce T")
    W = f.A @ psd_sqrt(f.B, tol)
    ranW, _ = range_kernel(W, tol)
    cond_ii = is_l2p(T_M, tol).in_l2p and ranW.contains(ranT, tol)
    return MDecomposition(M=M, T_M=T_M, T_upper_M=T_up, condition_ii=bool(cond_ii), witness=f)
