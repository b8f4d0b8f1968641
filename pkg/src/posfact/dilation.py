"""Dilations of members into simpler subclasses.

Stage 1 realizes a member ``T = A B`` as the corner of ``A~ B~`` where
``B~`` is an orthogonal projection on the doubled space.  Stage 2 applies
the same device to the adjoint of the stage-1 operator, which ends in a
product of two orthogonal projections on four times the space.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .core import DEFAULT_TOL, Subspace, Tolerances, as_square, max_angle, norm2, range_kernel
from .errors import CertificateError
from .factorization import optimal_pair
from .membership import projproj_residual


class Stage(str, enum.Enum):
    POS_PROJ = "PosProj"
    PROJ_PROJ = "ProjProj"


@dataclass(frozen=True)
class Dilation:
    """``T = scale * (corner of ambient on embed)``.

    ``left`` and ``right`` are the two positive factors of ``ambient``; for
    the ProjProj stage both are orthogonal projections.
    """

    ambient: np.ndarray = field(repr=False)
    embed: Subspace
    scale: float
    stage: Stage
    left: np.ndarray = field(repr=False)
    right: np.ndarray = field(repr=False)
    residuals: dict = field(default_factory=dict)

    def corner(self) -> np.ndarray:
        E = self.embed.basis
        return E.conj().T @ self.ambient @ E


def _projection_lift(A, B):
    """``(A ⊕ 0, B~)`` with ``B~`` the projection built from ``B``.

    ``B`` is rescaled to norm at most one and the factor moved into ``A``.
    """
    n = A.shape[0]
    s = max(1.0, norm2(B))
    A1 = A * s
    w, V = np.linalg.eigh(0.5 * (B + B.conj().T) / s)
    w = np.clip(w, 0.0, 1.0)
    def f(x):
        return (V * x) @ V.conj().T

    Bt = np.block([[f(w), f(np.sqrt(w * (1 - w)))], [f(np.sqrt(w * (1 - w))), f(1 - w)]])
    Bt = 0.5 * (Bt + Bt.conj().T)
    At = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    At[:n, :n] = A1
    return At, Bt


def _first_block(n, m):
    return Subspace(m, np.vstack([np.eye(n), np.zeros((m - n, n))]))


def dilate_pos_proj(T, tol: Tolerances = DEFAULT_TOL) -> Dilation:
    """Corner embedding of ``T`` into a positive-times-projection operator."""
    T = as_square(T)
    n = T.shape[0]
    f = optimal_pair(T, tol)
    At, Bt = _projection_lift(f.A, f.B)
    amb = At @ Bt
    emb = _first_block(n, 2 * n)
    nT = norm2(T)
    res = {
        "projection_idempotent": norm2(Bt @ Bt - Bt),
        "projection_hermitian": norm2(Bt - Bt.conj().T),
        "corner": norm2(amb[:n, :n] - T),
    }
    ranA, kerA = range_kernel(amb, tol)
    ranT, kerT = range_kernel(T, tol)
    pad = np.zeros((n, n))
    ranT0 = Subspace(2 * n, np.vstack([ranT.basis, pad[:, : ranT.dim]]))
    kerT0 = Subspace(2 * n, np.vstack([kerT.basis, pad[:, : kerT.dim]]))
    res["range_angle"] = max_angle(ranA, ranT0)
    res["kernel_contained"] = float(not kerA.contains(kerT0, tol))
    if res["corner"] > tol.tol_eq * max(nT, 1e-300) or res["range_angle"] > tol.tol_angle:
        raise CertificateError(f"stage-1 dilation failed its checks: {res}")
    if res["kernel_contained"]:
        raise CertificateError("ker T ⊕ 0 is not inside the kernel of the dilation")
    return Dilation(amb, emb, 1.0, Stage.POS_PROJ, At, Bt, res)


def dilate_proj_proj(T, tol: Tolerances = DEFAULT_TOL) -> Dilation:
    """Corner embedding of ``T / scale`` into a product of two projections."""
    T = as_square(T)
    n = T.shape[0]
    d1 = dilate_pos_proj(T, tol)
    At, Bt = d1.left, d1.right
    c = min(1.0, 1.0 / norm2(At)) if norm2(At) > 0 else 1.0
    # c T'^H = B~ (c A~): projection times a positive contraction
    P2, Q2 = _projection_lift(Bt, c * At)
    Tpp = P2 @ Q2
    amb = Tpp.conj().T
    m = 2 * n
    emb = _first_block(n, 4 * n)
    scale = d1.scale / c
    res = {
        "left_idempotent": norm2(P2 @ P2 - P2),
        "right_idempotent": norm2(Q2 @ Q2 - Q2),
        "right_hermitian": norm2(Q2 - Q2.conj().T),
        "corner": norm2(scale * amb[:n, :n] - T),
        "projproj": projproj_residual(amb),
        # H' ⊕ 0 is invariant for the adjoint of the ambient operator
        "invariance": norm2(Tpp[m:, :m]),
    }
    if res["corner"] > tol.tol_eq * max(norm2(T), 1e-300):
        raise CertificateError(f"stage-2 corner check failed: {res}")
    return Dilation(amb, emb, scale, Stage.PROJ_PROJ, Q2, P2, res)
