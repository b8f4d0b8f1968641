"""Functional calculus for products of two positive matrices.

Square roots, geometric means, spectral projections, spectral subspaces,
generalized inverses, resolvent growth sampling and the Riccati equation
``X H X = P K P``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    DEFAULT_TOL,
    Subspace,
    Tolerances,
    as_square,
    hermitian_part,
    intersection,
    max_angle,
    min_eig,
    norm2,
    pinv,
    psd_pinv_sqrt,
    psd_sqrt,
    range_kernel,
)
from .errors import CertificateError, DomainError, Infeasible, NotInvertible, NotPSD
from .factorization import Factorization, invertible_factor_pair, make_factorization, optimal_pair
from .membership import member_spectrum


def _herm(M):
    return 0.5 * (M + M.conj().T)


def _mean_pd(E, F, tol):
    w, V = np.linalg.eigh(E)
    Eh = (V * np.sqrt(w)) @ V.conj().T
    Eih = (V / np.sqrt(w)) @ V.conj().T
    inner = psd_sqrt(_herm(Eih @ F @ Eih), tol)
    return _herm(Eh @ inner @ Eh)


def geometric_mean(E, F, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """``E # F = E^{1/2} (E^{-1/2} F E^{-1/2})^{1/2} E^{1/2}``.

    ``E`` must be positive definite and ``F`` positive semidefinite.  The
    result is the unique positive solution of ``M E^{-1} M = F``.
    """
    E = hermitian_part(E, tol)
    F = hermitian_part(F, tol)
    if E.shape != F.shape:
        raise ValueError(f"E is {E.shape}, F is {F.shape}")
    w = np.linalg.eigvalsh(E)
    if w[0] <= tol.tol_psd * abs(w[-1]):
        raise NotInvertible(f"E is not positive definite (min eigenvalue {w[0]:.3e})")
    if min_eig(F) < -tol.tol_psd * norm2(F):
        raise NotPSD("F is not positive semidefinite")
    return _mean_pd(E, F, tol)


def sqrt_with_witness(T, tol: Tolerances = DEFAULT_TOL):
    """Square root ``R`` of a member together with the pair used to build it.

    The pair is the balanced invertible pair ``(A, B)``; the root is
    ``(B^{-1} # A) B`` and is certified by ``||R^2 - T|| <= tol_eq ||T||``.
    """
    T = as_square(T)
    f = invertible_factor_pair(T, tol, balanced=True)
    # B = (G G^H)^{-1} is invertible because cond(G) <= cond_max was certified
    Binv = _herm(np.linalg.inv(f.B))
    A = _herm(f.A)
    if min_eig(A) < -tol.tol_psd * norm2(A):
        raise NotPSD("A factor is not positive semidefinite")
    R = _mean_pd(Binv, A, tol) @ f.B
    resid = norm2(R @ R - T)
    if resid > tol.tol_eq * norm2(T):
        raise CertificateError(f"||R^2 - T|| = {resid:.3e}")
    return R, f


def sqrt_l2p(T, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Square root of a member that is itself a member.

    With ``T = A B`` and ``B`` invertible the root is ``(B^{-1} # A) B``.
    """
    return sqrt_with_witness(T, tol)[0]


def borel_calculus(T, f, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """``f(T) = G f(C) G^{-1}`` from the diagonalization of a member.

    ``f`` is called once per eigenvalue with a nonnegative float.
    """
    ms = member_spectrum(T, tol)
    vals = []
    with np.errstate(all="ignore"):
        for x in ms.values:
            try:
                y = complex(f(float(x)))
            except (ValueError, ZeroDivisionError, OverflowError, TypeError) as exc:
                raise DomainError(f"f is undefined at eigenvalue {x:.6g}: {exc}") from None
            if not np.isfinite(y):
                raise DomainError(f"f is not finite at eigenvalue {x:.6g}")
            vals.append(y)
    return (ms.G * np.array(vals)) @ ms.Ginv


# ---------------------------------------------------------------------------
# spectral projections


@dataclass(frozen=True)
class RieszDecomposition:
    terms: list = field(repr=False)  # (eigenvalue, idempotent)
    optimal_pair_sum: Factorization

    @property
    def eigenvalues(self):
        return [lam for lam, _ in self.terms]


def riesz_decomposition(T, tol: Tolerances = DEFAULT_TOL) -> RieszDecomposition:
    """``T = sum_j lam_j Q_j`` with spectral idempotents ``Q_j``.

    Each ``Q_j`` is the product of the right eigenvector block with the
    matching rows of ``G^{-1}``.  The attached pair is
    ``A = sum_{lam_j > 0} P_{ran Q_j}``, ``B = sum_j lam_j Q_j^H Q_j``.
    """
    T = as_square(T)
    ms = member_spectrum(T, tol)
    n = T.shape[0]
    terms = []
    A = np.zeros((n, n), dtype=np.complex128)
    B = np.zeros((n, n), dtype=np.complex128)
    for lam, idx in sorted(ms.groups, key=lambda g: g[0]):
        sel = list(idx)
        Q = ms.G[:, sel] @ ms.Ginv[sel, :]
        terms.append((lam, Q))
        if lam > 0:
            Ub, _ = np.linalg.qr(ms.G[:, sel])
            A += Ub @ Ub.conj().T
            B += lam * (Q.conj().T @ Q)
    pair = make_factorization(T, A, B, tol)
    return RieszDecomposition(terms=terms, optimal_pair_sum=pair)


def _shift_scale(T, lam):
    return max(norm2(T), abs(lam), 1e-300)


def kernel_power_dims(T, lam, tol: Tolerances = DEFAULT_TOL):
    """``(dim ker(T - lam), dim ker(T - lam)^2)`` at the rank cutoff."""
    T = as_square(T)
    n = T.shape[0]
    s = _shift_scale(T, lam)
    S = T - lam * np.eye(n)
    _, k1 = range_kernel(S, tol, scale=s)
    _, k2 = range_kernel(S @ S, tol, scale=s * s)
    return k1.dim, k2.dim


def local_spectral_subspace(T, lam: float, tol: Tolerances = DEFAULT_TOL) -> Subspace:
    """``ker(T - lam)``; for members this is the whole local spectral subspace.

    Also checks that ``(T - lam)^2`` has the same kernel, i.e. that there is
    no nilpotent part at ``lam``.
    """
    T = as_square(T)
    member_spectrum(T, tol)
    n = T.shape[0]
    s = _shift_scale(T, lam)
    _, ker = range_kernel(T - lam * np.eye(n), tol, scale=s)
    d1, d2 = kernel_power_dims(T, lam, tol)
    if d1 != d2:
        raise CertificateError(f"ker(T-lam)^2 has dimension {d2}, ker(T-lam) has {d1}")
    return ker


def algebraic_spectral_subspace(T, F, tol: Tolerances = DEFAULT_TOL) -> Subspace:
    """Intersection of ``ran(T - lam)`` over eigenvalues ``lam`` outside ``F``.

    For members it coincides with the span of the eigenvectors whose
    eigenvalues lie in ``F``; this is checked before returning.
    """
    T = as_square(T)
    n = T.shape[0]
    ms = member_spectrum(T, tol)
    width = max(tol.tol_cluster * norm2(T), 1e-300)
    F = [float(x) for x in F]

    def in_F(lam):
        return any(abs(lam - f) <= width for f in F)

    result = Subspace.full(n)
    inside = []
    for lam, idx in ms.groups:
        if in_F(lam):
            inside.extend(idx)
            continue
        rng, _ = range_kernel(T - lam * np.eye(n), tol, scale=_shift_scale(T, lam))
        result = intersection(result, rng, tol)
    expected = Subspace.span(ms.G[:, sorted(inside)], tol) if inside else Subspace.zero(n)
    ang = max_angle(result, expected)
    if ang > tol.tol_angle:
        raise CertificateError(
            f"range intersection differs from the eigenvector span (angle {ang:.3e})"
        )
    return result


# ---------------------------------------------------------------------------
# generalized inverses


@dataclass(frozen=True)
class MPInverse:
    dagger: np.ndarray = field(repr=False)
    one_two_inverse: np.ndarray = field(repr=False)
    oracle_error: float


def oblique_projection(ran: Subspace, ker: Subspace) -> np.ndarray:
    """Idempotent with range ``ran`` and kernel ``ker`` (complementary subspaces)."""
    n = ran.ambient_dim
    if ran.dim + ker.dim != n:
        raise ValueError("subspaces are not complementary")
    if ran.dim == 0:
        return np.zeros((n, n), dtype=np.complex128)
    W = np.hstack([ran.basis, ker.basis])
    D = np.zeros(n)
    D[: ran.dim] = 1.0
    return (W * D) @ np.linalg.inv(W)


def mp_inverse_l2p(T, tol: Tolerances = DEFAULT_TOL) -> MPInverse:
    """Moore-Penrose inverse ``T^+ = B^+ Q A^+`` from the optimal pair.

    ``Q`` is the idempotent onto ``ran T^H`` along ``ker T^H``.  Also returns
    the (1,2)-inverse ``Q^H T^+ Q^H``, itself a member.
    """
    T = as_square(T)
    f = optimal_pair(T, tol)
    ranTh, kerTh = range_kernel(T.conj().T, tol)
    Q = oblique_projection(ranTh, kerTh)
    dag = pinv(f.B, tol) @ Q @ pinv(f.A, tol)
    oracle = pinv(T, tol)
    err = norm2(dag - oracle)
    one_two = Q.conj().T @ dag @ Q.conj().T
    return MPInverse(dagger=dag, one_two_inverse=one_two, oracle_error=err)


# ---------------------------------------------------------------------------
# resolvent growth


@dataclass(frozen=True)
class ResolventCertificate:
    """Sampled bound ``||(T - z)^{-1}|| <= kappa (1 + |Im z|^{-2})``.

    ``profile`` holds one row per ``|Im z|`` level with the largest
    resolvent norm and ratio seen at that level.
    """

    kappa: float
    profile: list = field(repr=False)
    samples: int = 0


def resolvent_growth_certificate(
    T, samples: int = 40, seed: int = 0, tol: Tolerances = DEFAULT_TOL
) -> ResolventCertificate:
    T = as_square(T)
    ms = member_spectrum(T, tol)
    n = T.shape[0]
    if samples < 2:
        raise ValueError("samples must be at least 2")
    rng = np.random.default_rng(seed)
    s = max(norm2(T), 1.0)
    ims = s * np.logspace(-6, 0, samples)
    base = np.linspace(-s, 2 * s, samples)
    step = base[1] - base[0]
    res = np.concatenate([base + rng.uniform(-0.25, 0.25, samples) * step, ms.values])
    signs = rng.choice([-1.0, 1.0], size=samples)
    eye = np.eye(n)
    profile = []
    kappa = 0.0
    for y, sg in zip(ims, signs):
        z = res + 1j * sg * y
        stack = T[None, :, :] - z[:, None, None] * eye[None, :, :]
        smin = np.linalg.svd(stack, compute_uv=False)[:, -1]
        norms = 1.0 / smin
        ratio = norms / (1.0 + y**-2)
        k = int(np.argmax(ratio))
        profile.append(
            {"imag": float(y), "max_resolvent_norm": float(norms.max()), "max_ratio": float(ratio[k])}
        )
        kappa = max(kappa, float(ratio[k]))
    return ResolventCertificate(kappa=kappa, profile=profile, samples=len(res) * samples)


# ---------------------------------------------------------------------------
# Riccati equation X H X = P K P


@dataclass(frozen=True)
class RiccatiSolution:
    X: np.ndarray = field(repr=False)
    a: float
    residual: float


def pedersen_takesaki(H, K, tol: Tolerances = DEFAULT_TOL) -> RiccatiSolution:
    """Positive ``X`` with ``X H X = P K P``, ``P`` the projection onto ``ran H``.

    ``X`` is read off as the lower-right block of the compression to the
    first slot of the positive block matrix ``[[H, L], [L^H, c]]`` with
    ``L = H^{1/2} M^{1/4} H^{+1/2}`` and ``M = H^{1/2} K H^{1/2}``.
    ``a`` is the least scalar with ``M^{1/2} <= a H`` on ``ran H``.
    """
    from .factorization import schur_complement

    H = hermitian_part(H, tol)
    K = hermitian_part(K, tol)
    if H.shape != K.shape:
        raise ValueError(f"H is {H.shape}, K is {K.shape}")
    for name, M in (("H", H), ("K", K)):
        if min_eig(M) < -tol.tol_psd * norm2(M):
            raise NotPSD(f"{name} is not positive semidefinite")
    n = H.shape[0]
    nH = norm2(H)
    ranH, _ = range_kernel(H, tol)
    P = ranH.projector()
    if ranH.dim == 0 or norm2(P @ K @ P) == 0:
        Z = np.zeros_like(H)
        return RiccatiSolution(X=Z, a=0.0, residual=0.0)
    Hh = psd_sqrt(H, tol)
    Hih = psd_pinv_sqrt(H, tol)
    M = _herm(Hh @ K @ Hh)
    M4 = psd_sqrt(psd_sqrt(M, tol), tol)
    L = Hh @ M4 @ Hih
    leak = norm2(L - P @ L)
    if leak > tol.tol_eq * max(norm2(L), 1e-300):
        raise Infeasible("off-diagonal block leaves ran H")
    Hinv = pinv(H, tol)
    c = max(norm2(L) ** 2 * norm2(Hinv), 1e-300)
    blk = np.block([[H, L], [L.conj().T, c * np.eye(n)]])
    first = Subspace(2 * n, np.vstack([np.eye(n), np.zeros((n, n))]))
    comp = schur_complement(blk, first, tol).compression
    X = _herm(comp[n:, n:])
    a = float(np.linalg.eigvalsh(X)[-1]) if n else 0.0
    target = P @ K @ P
    resid = norm2(X @ H @ X - target)
    scale = max(norm2(target), norm2(X) ** 2 * nH, 1e-300)
    if resid > tol.tol_eq * scale:
        raise CertificateError(f"||XHX - PKP|| = {resid:.3e}")
    return RiccatiSolution(X=X, a=max(a, 0.0), residual=resid)


__all__ = [
    "MPInverse",
    "ResolventCertificate",
    "RiccatiSolution",
    "RieszDecomposition",
    "algebraic_spectral_subspace",
    "borel_calculus",
    "geometric_mean",
    "kernel_power_dims",
    "local_spectral_subspace",
    "mp_inverse_l2p",
    "oblique_projection",
    "pedersen_takesaki",
    "resolvent_growth_certificate",
    "riesz_decomposition",
    "sqrt_l2p",
]
