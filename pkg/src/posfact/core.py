"""Dense complex linear-algebra kernel.

Every operator is a ``numpy`` complex128 array.  The functions here are pure:
they never mutate their inputs and keep no state between calls.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.sparse.csgraph import connected_components

from .errors import (
    DimensionMismatch,
    InputError,
    NotHermitian,
    NotPSD,
    RangeNotContained,
)


@dataclass(frozen=True)
class Tolerances:
    """Numeric policy shared by every routine.

    tol_rank
        relative singular-value cutoff for ranks, ranges and kernels
    tol_psd
        relative floor below which a negative eigenvalue counts as negative
    tol_eq
        residual tolerance for identities such as ``A @ B == T``
    tol_cluster
        relative width for single-linkage eigenvalue clustering
    cond_max
        eigenvector-matrix condition above which a matrix is called defective
    tol_angle
        principal-angle tolerance for range and kernel comparisons
    """

    tol_rank: float = 1e-10
    tol_psd: float = 1e-10
    tol_eq: float = 1e-8
    tol_cluster: float = 1e-8
    cond_max: float = 1e8
    tol_angle: float = 1e-7

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if not (np.isfinite(v) and v > 0):
                raise InputError(f"{f.name} must be finite and > 0, got {v!r}")
        for name in ("tol_rank", "tol_psd", "tol_cluster"):
            if getattr(self, name) >= 1e-2:
                raise InputError(f"{name} must be much smaller than 1")

    def replace(self, **changes) -> "Tolerances":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


DEFAULT_TOL = Tolerances()


# ---------------------------------------------------------------------------
# basic helpers


def as_matrix(M) -> np.ndarray:
    """Return ``M`` as a finite 2-D complex128 array (copying if needed)."""
    try:
        A = np.array(M, dtype=np.complex128)
    except (TypeError, ValueError) as exc:
        raise InputError(f"cannot interpret input as a complex matrix: {exc}") from None
    if A.ndim == 0:
        A = A.reshape(1, 1)
    if A.ndim != 2:
        raise InputError(f"expected a 2-D matrix, got {A.ndim} dimensions")
    if A.shape[0] < 1 or A.shape[1] < 1:
        raise InputError(f"matrix must be at least 1x1, got {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InputError("matrix has NaN or infinite entries")
    return A


def as_square(M) -> np.ndarray:
    A = as_matrix(M)
    if A.shape[0] != A.shape[1]:
        raise InputError(f"expected a square matrix, got {A.shape[0]}x{A.shape[1]}")
    return A


def norm2(M) -> float:
    """Spectral norm."""
    M = np.asarray(M)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def adjoint(M) -> np.ndarray:
    return np.asarray(M).conj().T


def hermitian_part(M, tol: Tolerances = DEFAULT_TOL, check: bool = True) -> np.ndarray:
    """``(M + M^H)/2``.

    With ``check`` an asymmetry larger than ``tol_eq * ||M||`` raises
    :class:`NotHermitian`; smaller asymmetry is silently repaired.
    """
    M = as_square(M)
    H = 0.5 * (M + M.conj().T)
    if check:
        skew = norm2(M - H)
        if skew > tol.tol_eq * max(norm2(M), np.finfo(float).tiny):
            raise NotHermitian(f"matrix is not Hermitian (skew part norm {skew:.3e})")
    return H


def fix_phase(V: np.ndarray) -> np.ndarray:
    """Scale each column so its first entry of largest modulus is real positive."""
    V = np.array(V, dtype=np.complex128, copy=True)
    if V.size == 0:
        return V
    mags = np.abs(V)
    colmax = mags.max(axis=0)
    for j in range(V.shape[1]):
        if colmax[j] == 0:
            continue
        # first index within rounding of the largest modulus
        i = int(np.argmax(mags[:, j] >= colmax[j] * (1 - 1e-8)))
        z = V[i, j]
        V[:, j] *= np.conj(z) / abs(z)
    return V


def min_eig(M) -> float:
    """Smallest eigenvalue of the Hermitian part of ``M``."""
    H = 0.5 * (np.asarray(M) + np.asarray(M).conj().T)
    return float(np.linalg.eigvalsh(H)[0])


def loewner_leq(X, Y, tol: Tolerances = DEFAULT_TOL, scale: float | None = None) -> bool:
    """``X <= Y`` in the Loewner order, up to ``tol_psd * scale``."""
    if scale is None:
        scale = max(norm2(X), norm2(Y), 1.0)
    return min_eig(np.asarray(Y) - np.asarray(X)) >= -tol.tol_psd * scale


# ---------------------------------------------------------------------------
# Hermitian spectral routines


def eig_hermitian(M, tol: Tolerances = DEFAULT_TOL):
    """Eigen-decomposition of the Hermitian part of ``M``.

    Returns ``(w, V)`` with ``w`` ascending and ``V`` unitary; columns follow
    the phase convention of :func:`fix_phase`.
    """
    H = hermitian_part(M, tol, check=False)
    w, V = np.linalg.eigh(H)
    return w, fix_phase(V)


def hermitian_function(M, f, tol: Tolerances = DEFAULT_TOL, check: bool = True) -> np.ndarray:
    """Apply a real scalar function to a Hermitian matrix through ``eigh``."""
    H = hermitian_part(M, tol, check=check)
    w, V = np.linalg.eigh(H)
    fw = np.asarray(f(w), dtype=float)
    out = (V * fw) @ V.conj().T
    return 0.5 * (out + out.conj().T)


def _psd_eigs(M, tol: Tolerances):
    H = hermitian_part(M, tol)
    w, V = np.linalg.eigh(H)
    scale = max(np.abs(w).max(), 0.0)
    if w[0] < -tol.tol_psd * scale:
        raise NotPSD(f"matrix has eigenvalue {w[0]:.3e} below -tol_psd*||M||")
    # below the rank floor an eigenvalue is numerically zero
    w = np.where(w > tol.tol_rank * scale, w, 0.0)
    return w, V


def psd_sqrt(M, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Positive square root of a Hermitian PSD matrix."""
    w, V = _psd_eigs(M, tol)
    R = (V * np.sqrt(w)) @ V.conj().T
    return 0.5 * (R + R.conj().T)


def psd_pinv_sqrt(M, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Moore-Penrose inverse of the positive square root, ``(M^{1/2})^+``.

    The rank cutoff is applied to the eigenvalues of ``M`` itself, so the
    result is consistent with ``pinv(M)`` at the same tolerance.
    """
    w, V = _psd_eigs(M, tol)
    inv = np.zeros_like(w)
    nz = w > 0
    inv[nz] = 1.0 / np.sqrt(w[nz])
    R = (V * inv) @ V.conj().T
    return 0.5 * (R + R.conj().T)


def pinv(M, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """SVD pseudo-inverse; singular values below ``tol_rank * s_max`` are dropped."""
    M = as_matrix(M)
    U, s, Vh = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((M.shape[1], M.shape[0]), dtype=np.complex128)
    keep = s > tol.tol_rank * s[0]
    return (Vh[keep].conj().T / s[keep]) @ U[:, keep].conj().T


# ---------------------------------------------------------------------------
# subspaces


@dataclass(frozen=True)
class Subspace:
    """A subspace of ``C^n`` held as an orthonormal column basis."""

    ambient_dim: int
    basis: np.ndarray = field(repr=False)

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=np.complex128)
        if B.ndim != 2 or B.shape[0] != self.ambient_dim:
            raise DimensionMismatch(
                f"basis shape {B.shape} does not match ambient dimension {self.ambient_dim}"
            )
        object.__setattr__(self, "basis", B)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def zero(cls, n: int) -> "Subspace":
        return cls(n, np.zeros((n, 0), dtype=np.complex128))

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls(n, np.eye(n, dtype=np.complex128))

    @classmethod
    def span(cls, vectors, tol: Tolerances = DEFAULT_TOL) -> "Subspace":
        """Orthonormal basis for the column span of ``vectors``."""
        V = np.asarray(vectors, dtype=np.complex128)
        if V.ndim == 1:
            V = V[:, None]
        n = V.shape[0]
        if V.shape[1] == 0:
            return cls.zero(n)
        rng, _ = range_kernel(V, tol)
        return rng

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def complement(self) -> "Subspace":
        n = self.ambient_dim
        if self.dim == 0:
            return Subspace.full(n)
        if self.dim == n:
            return Subspace.zero(n)
        Q, _ = np.linalg.qr(self.basis, mode="complete")
        return Subspace(n, fix_phase(Q[:, self.dim:]))

    def contains(self, other: "Subspace", tol: Tolerances = DEFAULT_TOL) -> bool:
        if other.dim == 0:
            return True
        resid = other.basis - self.basis @ (self.basis.conj().T @ other.basis)
        return norm2(resid) <= tol.tol_angle

    def __repr__(self):
        return f"Subspace(ambient_dim={self.ambient_dim}, dim={self.dim})"


def range_kernel(M, tol: Tolerances = DEFAULT_TOL, scale: float | None = None):
    """Orthonormal bases of ``ran M`` and ``ker M`` from one SVD.

    The cutoff is ``tol_rank * s_max`` unless ``scale`` is given, in which
    case it is ``tol_rank * scale``.  Pass a scale whenever ``M`` is a
    shifted operator such as ``T - lam*1`` whose own norm may be tiny.
    """
    M = as_matrix(M)
    m, n = M.shape
    U, s, Vh = np.linalg.svd(M, full_matrices=True)
    ref = s[0] if scale is None else scale
    r = int(np.count_nonzero(s > tol.tol_rank * ref)) if s.size else 0
    rng = Subspace(m, fix_phase(U[:, :r]))
    ker = Subspace(n, fix_phase(Vh[r:].conj().T))
    return rng, ker


def numerical_rank(M, tol: Tolerances = DEFAULT_TOL, scale: float | None = None) -> int:
    s = np.linalg.svd(as_matrix(M), compute_uv=False)
    ref = s[0] if scale is None else scale
    return int(np.count_nonzero(s > tol.tol_rank * ref))


def _check_same_ambient(U: Subspace, V: Subspace):
    if U.ambient_dim != V.ambient_dim:
        raise DimensionMismatch(
            f"subspaces live in different spaces ({U.ambient_dim} vs {V.ambient_dim})"
        )


def principal_angles(U: Subspace, V: Subspace) -> np.ndarray:
    """Principal angles between two subspaces, ascending, in ``[0, pi/2]``."""
    _check_same_ambient(U, V)
    if U.dim == 0 or V.dim == 0:
        return np.zeros(0)
    # scipy uses the sine/cosine split, accurate for tiny angles
    ang = scipy.linalg.subspace_angles(U.basis, V.basis)
    return np.clip(np.sort(ang), 0.0, np.pi / 2)


def max_angle(U: Subspace, V: Subspace) -> float:
    """Largest principal angle, ``pi/2`` when the dimensions differ."""
    if U.dim != V.dim:
        return float(np.pi / 2)
    if U.dim == 0:
        return 0.0
    return float(principal_angles(U, V)[-1])


def _angle_cutoff(tol: Tolerances) -> float:
    # both the stacked-complement matrix and [U V] have singular values
    # sqrt(2)*sin(theta/2) for a principal angle theta
    return np.sqrt(2.0) * np.sin(tol.tol_angle / 2)


def intersection(U: Subspace, V: Subspace, tol: Tolerances = DEFAULT_TOL) -> Subspace:
    """``U ∩ V`` as the kernel of the stacked complement projectors."""
    _check_same_ambient(U, V)
    n = U.ambient_dim
    if U.dim == 0 or V.dim == 0:
        return Subspace.zero(n)
    eye = np.eye(n)
    stacked = np.vstack([eye - U.projector(), eye - V.projector()])
    _, s, Vh = np.linalg.svd(stacked, full_matrices=True)
    k = int(np.count_nonzero(s <= _angle_cutoff(tol)))
    return Subspace(n, fix_phase(Vh[n - k:].conj().T))


def subspace_sum(U: Subspace, V: Subspace, tol: Tolerances = DEFAULT_TOL) -> Subspace:
    """``U + V`` from the concatenated bases."""
    _check_same_ambient(U, V)
    n = U.ambient_dim
    W = np.hstack([U.basis, V.basis])
    if W.shape[1] == 0:
        return Subspace.zero(n)
    Q, s, _ = np.linalg.svd(W, full_matrices=False)
    r = int(np.count_nonzero(s > _angle_cutoff(tol)))
    return Subspace(n, fix_phase(Q[:, :r]))


@dataclass(frozen=True)
class SubspaceRelation:
    intersection: Subspace
    sum: Subspace
    principal_angles: np.ndarray


def subspace_ops(U: Subspace, V: Subspace, tol: Tolerances = DEFAULT_TOL) -> SubspaceRelation:
    return SubspaceRelation(
        intersection=intersection(U, V, tol),
        sum=subspace_sum(U, V, tol),
        principal_angles=principal_angles(U, V),
    )


# ---------------------------------------------------------------------------
# Douglas lemma


def douglas_solve(A, T, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Minimal-norm ``X`` with ``A @ X = T``.

    Raises :class:`RangeNotContained` if the columns of ``T`` leave
    ``ran A`` by more than ``tol_eq * ||T||``.
    """
    A = as_matrix(A)
    T = as_matrix(T)
    if A.shape[0] != T.shape[0]:
        raise DimensionMismatch(f"row counts differ: {A.shape[0]} vs {T.shape[0]}")
    rng, _ = range_kernel(A, tol)
    Ur = rng.basis
    leak = norm2(T - Ur @ (Ur.conj().T @ T))
    if leak > tol.tol_eq * norm2(T):
        raise RangeNotContained(f"ran T is not inside ran A (leak {leak:.3e})")
    return pinv(A, tol) @ T


# ---------------------------------------------------------------------------
# general spectra


@dataclass(frozen=True)
class Cluster:
    eigenvalue: complex
    algebraic_mult: int
    geometric_mult: int
    indices: tuple = field(repr=False)
    spread: float = field(default=0.0, repr=False)


@dataclass(frozen=True)
class SpectrumReport:
    """Clustered spectrum with diagonalizability and positivity verdicts.

    ``eigenvectors`` holds unit columns matching ``eigenvalues``.  Inside a
    tight cluster of a repeated eigenvalue the columns are replaced by an
    orthonormal basis of their span.
    """

    clusters: list
    eigvec_cond: float
    diagonalizable: bool
    spectrum_nonneg: bool
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)
    norm: float = 0.0

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    def labels(self) -> np.ndarray:
        lab = np.empty(self.n, dtype=int)
        for c, cl in enumerate(self.clusters):
            lab[list(cl.indices)] = c
        return lab


def cluster_values(w: np.ndarray, width: float) -> list:
    """Single-linkage clusters of complex numbers; index lists sorted by mean real part."""
    w = np.asarray(w)
    if w.size == 0:
        return []
    D = np.abs(w[:, None] - w[None, :])
    ncomp, lab = connected_components(D <= width, directed=False)
    groups = [np.flatnonzero(lab == c) for c in range(ncomp)]
    groups.sort(key=lambda g: (float(np.mean(w[g].real)), float(np.mean(w[g].imag))))
    return [tuple(int(i) for i in g) for g in groups]


def _safe_cond(V: np.ndarray) -> float:
    if V.size == 0:
        return 1.0
    s = np.linalg.svd(V, compute_uv=False)
    if s[-1] == 0:
        return float("inf")
    return float(s[0] / s[-1])


def eig_unit(T) -> tuple:
    """Eigenvalues and unit-column eigenvectors of a square matrix.

    LAPACK's ``geev`` balances by diagonal scaling first, which can cost many
    digits when the matrix carries tiny noise entries.  Going through the
    complex Schur form avoids that: a triangular matrix is fully isolated by
    the permutation step, so no scaling is applied before back-substitution.
    """
    T = np.asarray(T, dtype=np.complex128)
    U, Z = scipy.linalg.schur(T, output="complex")
    w, Vt = np.linalg.eig(U)
    V = Z @ Vt
    return w, V / np.linalg.norm(V, axis=0)


def eig_general(T, tol: Tolerances = DEFAULT_TOL) -> SpectrumReport:
    """Eigenvalues, clusters, multiplicities and verdicts for a square matrix."""
    T = as_square(T)
    n = T.shape[0]
    nrm = norm2(T)
    w, V = eig_unit(T)
    raw_cond = _safe_cond(V)
    G = V.copy()
    eye = np.eye(n)

    clusters = []
    for idx in cluster_values(w, tol.tol_cluster * nrm):
        sel = list(idx)
        lam = complex(np.mean(w[sel]))
        spread = float(np.max(np.abs(w[sel] - lam)))
        alg = len(sel)
        # on the invariant subspace ||(T - lam)v|| <= spread * cond
        thresh = tol.tol_rank * nrm + spread * min(raw_cond, tol.cond_max)
        s = np.linalg.svd(T - lam * eye, compute_uv=False)
        geo = min(int(np.count_nonzero(s <= thresh)), alg)
        if alg > 1 and spread <= tol.tol_rank * max(nrm, 1e-300):
            Ub, sb, _ = np.linalg.svd(V[:, sel], full_matrices=False)
            if sb[-1] >= sb[0] / tol.cond_max:
                G[:, sel] = fix_phase(Ub[:, :alg])
        clusters.append(Cluster(lam, alg, geo, tuple(sel), spread))

    G = fix_phase(G)
    kappa = _safe_cond(G)
    diagonalizable = sum(c.geometric_mult for c in clusters) == n and kappa <= tol.cond_max
    floor = tol.tol_psd * nrm
    nonneg = all(c.eigenvalue.real >= -floor and abs(c.eigenvalue.imag) <= floor for c in clusters)
    return SpectrumReport(
        clusters=clusters,
        eigvec_cond=kappa,
        diagonalizable=bool(diagonalizable),
        spectrum_nonneg=bool(nonneg),
        eigenvalues=w,
        eigenvectors=G,
        norm=nrm,
    )


def eigvec_condition(T) -> float:
    """Condition number of the eigenvector matrix with unit columns."""
    _, V = eig_unit(as_square(T))
    return _safe_cond(V)
