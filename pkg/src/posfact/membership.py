"""Membership in the class of products of two positive matrices.

A square matrix is such a product exactly when it is diagonalizable with a
nonnegative spectrum.  The routines here make that call numerically, sort
members into the nested subclasses

    ProjProj  (product of two orthogonal projections)
    PosProj   (positive times an orthogonal projection)
    General   (any other member)

and attach a factorization witness to every positive verdict.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DEFAULT_TOL,
    SpectrumReport,
    Tolerances,
    as_matrix,
    as_square,
    douglas_solve,
    eig_general,
    hermitian_part,
    min_eig,
    norm2,
    numerical_rank,
    psd_sqrt,
    range_kernel,
)
from .errors import (
    CertificateError,
    DimensionMismatch,
    Infeasible,
    NotHermitian,
    NotInClass,
    NotPSD,
    RangeNotContained,
)


class Subclass(str, enum.Enum):
    PROJ_PROJ = "ProjProj"
    POS_PROJ = "PosProj"
    GENERAL = "General"
    OUTSIDE = "Outside"


class Confidence(str, enum.Enum):
    FIRM = "firm"
    NEAR_BOUNDARY = "near_boundary"


@dataclass(frozen=True)
class MembershipVerdict:
    in_l2p: bool
    subclass: Subclass
    witness: object  # Factorization or None
    reason: str
    confidence: Confidence
    spectrum: SpectrumReport = field(repr=False, default=None)


# ---------------------------------------------------------------------------
# spectral data of members


@dataclass(frozen=True)
class MemberSpectrum:
    """Diagonalization ``T = G diag(values) G^{-1}`` of a member.

    ``values`` are real and nonnegative; the columns of ``G`` belonging to the
    zero eigenvalue form an orthonormal basis of ``ker T``.  ``groups`` lists
    ``(eigenvalue, column indices)`` with the zero group (if any) first.
    """

    G: np.ndarray
    Ginv: np.ndarray
    values: np.ndarray
    groups: list
    report: SpectrumReport
    zero_dim: int

    @property
    def positive_mask(self) -> np.ndarray:
        return self.values > 0


def member_spectrum(T, tol: Tolerances = DEFAULT_TOL) -> MemberSpectrum:
    """Diagonalize a member; :class:`NotInClass` otherwise."""
    T = as_square(T)
    n = T.shape[0]
    rep = eig_general(T, tol)
    if not rep.diagonalizable:
        raise NotInClass("matrix is not diagonalizable")
    if not rep.spectrum_nonneg:
        raise NotInClass("spectrum is not contained in [0, inf)")
    w = rep.eigenvalues
    G = rep.eigenvectors.copy()
    nrm = rep.norm
    k0 = n - numerical_rank(T, tol) if nrm > 0 else n
    order = np.argsort(np.abs(w), kind="stable")
    zero_idx = np.sort(order[:k0])
    values = np.clip(w.real, 0.0, None)
    values[zero_idx] = 0.0
    if k0:
        _, ker = range_kernel(T, tol, scale=nrm if nrm > 0 else 1.0)
        G[:, zero_idx] = ker.basis
    cond = np.linalg.cond(G)
    if not np.isfinite(cond) or cond > tol.cond_max:
        raise NotInClass("eigenvector basis is numerically singular")
    Ginv = np.linalg.inv(G)

    zero_set = set(int(i) for i in zero_idx)
    groups = []
    if k0:
        groups.append((0.0, tuple(int(i) for i in zero_idx)))
    for cl in rep.clusters:
        idx = tuple(i for i in cl.indices if i not in zero_set)
        if idx:
            groups.append((float(np.mean(values[list(idx)])), idx))
    return MemberSpectrum(G=G, Ginv=Ginv, values=values, groups=groups, report=rep, zero_dim=k0)


# ---------------------------------------------------------------------------
# verdicts


def _confidence(rep: SpectrumReport, tol: Tolerances) -> Confidence:
    n = rep.n
    kappa = rep.eigvec_cond
    geo_total = sum(c.geometric_mult for c in rep.clusters)
    near = False
    if geo_total == n:
        # conditioning decides; exactly defective matrices are not borderline
        if kappa > tol.cond_max / 10:
            near = True
    elif kappa > tol.cond_max and any(
        c.spread > 0 for c in rep.clusters if c.geometric_mult < c.algebraic_mult
    ):
        # merged eigenvalues that are distinct as computed: a nearby matrix may be a member
        near = True
    floor = tol.tol_psd * rep.norm
    if floor > 0:
        for c in rep.clusters:
            re, im = c.eigenvalue.real, abs(c.eigenvalue.imag)
            if -10 * floor <= re < -floor / 10:
                near = True
            if floor / 10 < im <= 10 * floor:
                near = True
    return Confidence.NEAR_BOUNDARY if near else Confidence.FIRM


def is_l2p(T, tol: Tolerances = DEFAULT_TOL) -> MembershipVerdict:
    """Decide whether ``T`` is a product of two positive matrices.

    On a positive verdict the witness is the optimal pair of ``T``.
    """
    from .factorization import optimal_pair

    T = as_square(T)
    rep = eig_general(T, tol)
    conf = _confidence(rep, tol)
    if not rep.diagonalizable:
        geo = sum(c.geometric_mult for c in rep.clusters)
        if geo < rep.n:
            reason = f"not diagonalizable (geometric multiplicities sum to {geo} < {rep.n})"
        else:
            reason = f"eigenvector matrix too ill-conditioned (cond {rep.eigvec_cond:.3e})"
        return MembershipVerdict(False, Subclass.OUTSIDE, None, reason, conf, rep)
    if not rep.spectrum_nonneg:
        bad = [c.eigenvalue for c in rep.clusters]
        worst = min(bad, key=lambda z: min(z.real, -abs(z.imag)))
        return MembershipVerdict(
            False, Subclass.OUTSIDE, None,
            f"spectrum not in [0, inf) (eigenvalue {worst:.6g})", conf, rep,
        )
    try:
        witness = optimal_pair(T, tol)
    except (CertificateError, NotInClass) as exc:
        return MembershipVerdict(
            False, Subclass.OUTSIDE, None,
            f"witness construction failed: {exc}", Confidence.NEAR_BOUNDARY, rep,
        )
    return MembershipVerdict(
        True, Subclass.GENERAL, witness,
        "diagonalizable with nonnegative spectrum", conf, rep,
    )


def projproj_residual(T) -> float:
    """``||T T^H T - T^2||``; zero exactly for products of two projections."""
    T = as_square(T)
    return norm2(T @ T.conj().T @ T - T @ T)


def _projproj_witness(T, tol):
    from .factorization import make_factorization

    rng, _ = range_kernel(T, tol)
    rng_adj, _ = range_kernel(T.conj().T, tol)
    P = rng.projector()
    Q = rng_adj.projector()
    return make_factorization(T, P, Q, tol)


def posproj_blocks(T, tol: Tolerances = DEFAULT_TOL):
    """Return ``A`` with ``T = A P_{ran T^H}`` and ``A`` minimal, or ``None``.

    Works in the basis ``ran T^H ⊕ ker T``: the leading block must be
    Hermitian PSD and the lower-left block must have range inside it.
    """
    T = as_square(T)
    n = T.shape[0]
    nrm = norm2(T)
    if nrm == 0:
        return np.zeros((n, n), dtype=np.complex128)
    rng_adj, _ = range_kernel(T.conj().T, tol)
    V1 = rng_adj.basis
    _, kerT = range_kernel(T, tol)
    V2 = kerT.basis
    T11 = V1.conj().T @ T @ V1
    T21 = V2.conj().T @ T @ V1
    try:
        H11 = hermitian_part(T11, tol)
    except NotHermitian:
        return None
    if min_eig(H11) < -tol.tol_psd * nrm:
        return None
    if V2.shape[1] == 0:
        return V1 @ H11 @ V1.conj().T
    if V1.shape[1] == 0:
        return np.zeros((n, n), dtype=np.complex128)
    try:
        R = psd_sqrt(H11, tol)
        Gd = douglas_solve(R, T21.conj().T, tol)
    except (RangeNotContained, NotPSD):
        return None
    A22 = Gd.conj().T @ Gd
    V = np.hstack([V1, V2])
    blk = np.block([[H11, T21.conj().T], [T21, A22]])
    A = V @ blk @ V.conj().T
    return 0.5 * (A + A.conj().T)


def classify_subclass(T, tol: Tolerances = DEFAULT_TOL) -> MembershipVerdict:
    """Finest subclass containing ``T``."""
    from .factorization import make_factorization

    T = as_square(T)
    nrm = norm2(T)
    base = is_l2p(T, tol)
    res = projproj_residual(T)
    if res <= tol.tol_eq * max(nrm**3, np.finfo(float).tiny) or nrm == 0:
        try:
            w = _projproj_witness(T, tol)
            return MembershipVerdict(
                True, Subclass.PROJ_PROJ, w,
                f"T T^H T = T^2 (residual {res:.3e})", base.confidence, base.spectrum,
            )
        except CertificateError:
            pass
    A = posproj_blocks(T, tol)
    if A is not None:
        rng_adj, _ = range_kernel(T.conj().T, tol)
        try:
            w = make_factorization(T, A, rng_adj.projector(), tol)
            return MembershipVerdict(
                True, Subclass.POS_PROJ, w,
                "positive compression on ran T^H with compatible off-diagonal block",
                base.confidence, base.spectrum,
            )
        except CertificateError:
            pass
    if base.in_l2p:
        return base
    return MembershipVerdict(
        False, Subclass.OUTSIDE, None, base.reason, base.confidence, base.spectrum
    )


def feasibility_lambda(A, T, tol: Tolerances = DEFAULT_TOL) -> float:
    """Smallest ``lam >= 0`` with ``T T^H <= lam * A T^H``.

    ``A T^H`` must itself be Hermitian PSD and its range must contain
    ``ran T``; otherwise :class:`Infeasible` is raised.
    """
    A = hermitian_part(A, tol)
    T = as_matrix(T)
    if A.shape[0] != T.shape[0] or A.shape[1] != T.shape[1]:
        raise DimensionMismatch(f"A is {A.shape}, T is {T.shape}")
    nA = norm2(A)
    if min_eig(A) < -tol.tol_psd * nA:
        raise NotPSD("A is not positive semidefinite")
    nT = norm2(T)
    if nT == 0:
        return 0.0
    S = A @ T.conj().T
    scale = max(nA * nT, nT**2)
    if norm2(S - S.conj().T) > tol.tol_eq * scale:
        raise Infeasible("A T^H is not Hermitian")
    S = 0.5 * (S + S.conj().T)
    if min_eig(S) < -tol.tol_psd * scale:
        raise Infeasible("A T^H is not positive semidefinite")
    rng, _ = range_kernel(S, tol, scale=scale)
    U = rng.basis
    leak = norm2(T - U @ (U.conj().T @ T))
    if U.shape[1] == 0 or leak > tol.tol_eq * nT:
        raise Infeasible("ran T is not contained in ran A T^H")
    Sr = U.conj().T @ S @ U
    Mr = U.conj().T @ T @ T.conj().T @ U
    w, V = np.linalg.eigh(0.5 * (Sr + Sr.conj().T))
    if w[0] <= 0:
        raise Infeasible("A T^H is singular on its own range")
    Wi = (V / np.sqrt(w)) @ V.conj().T
    K = Wi @ Mr @ Wi
    lam = float(np.linalg.eigvalsh(0.5 * (K + K.conj().T))[-1])
    return max(lam, 0.0)


__all__ = [
    "Confidence",
    "MemberSpectrum",
    "MembershipVerdict",
    "Subclass",
    "classify_subclass",
    "feasibility_lambda",
    "is_l2p",
    "member_spectrum",
    "posproj_blocks",
    "projproj_residual",
]
