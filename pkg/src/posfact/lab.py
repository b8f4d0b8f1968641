"""Worked examples and dimension sweeps.

The gallery builds small matrices with known structure.  The truncation
experiments build families indexed by dimension whose witnesses (similarity
condition numbers, factor norms) grow without bound as the dimension does.
Every finite member is similar to a positive matrix, so growth of these
metrics is the only thing a finite computation can show.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DEFAULT_TOL,
    Subspace,
    Tolerances,
    douglas_solve,
    eigvec_condition,
    loewner_leq,
    max_angle,
    norm2,
    principal_angles,
    range_kernel,
)
from .calculus import oblique_projection, sqrt_with_witness
from .errors import CertificateError, InvalidParams, NotInClass, UnknownName
from .factorization import PairOrder, make_factorization, pair_leq
from .membership import classify_subclass, is_l2p


@dataclass
class LabResult:
    """Metric table of a sweep, one group of rows per dimension."""

    name: str
    dims: list
    metrics: list = field(default_factory=list)  # (dim, metric, value)
    matrices: dict = field(default_factory=dict, repr=False)
    verdicts: str = ""

    def add(self, dim, metric, value):
        self.metrics.append((int(dim), str(metric), value))

    def column(self, metric):
        """Values of one metric in dimension order."""
        return [v for d, m, v in self.metrics if m == metric]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["dim", "metric", "value"])
        for d, m, v in self.metrics:
            w.writerow([d, m, repr(float(v)) if isinstance(v, float) else v])
        return buf.getvalue()

    def to_dict(self) -> dict:
        def conv(v):
            if isinstance(v, (bool, np.bool_)):
                return bool(v)
            if isinstance(v, (int, np.integer)):
                return int(v)
            if isinstance(v, (float, np.floating)):
                return float(v) if np.isfinite(v) else str(v)
            return v

        return {
            "name": self.name,
            "dims": [int(d) for d in self.dims],
            "metrics": [{"dim": d, "metric": m, "value": conv(v)} for d, m, v in self.metrics],
            "verdicts": self.verdicts,
        }


# ---------------------------------------------------------------------------
# gallery


@dataclass(frozen=True)
class GalleryItem:
    name: str
    matrix: np.ndarray = field(repr=False)
    metadata: dict = field(default_factory=dict)
    certificates: dict = field(default_factory=dict)
    witnesses: dict = field(default_factory=dict, repr=False)


def _basis(v, n=None):
    V = np.atleast_2d(np.asarray(v, dtype=np.complex128))
    if V.shape[0] == 1 and (n is None or V.shape[1] == n):
        V = V.T
    return V


def _oblique(params, tol):
    M = _basis(params.get("M", [[1.0], [0.0]]))
    N = _basis(params.get("N", [[1.0], [-1.0]]))
    if M.shape[0] != N.shape[0]:
        raise InvalidParams("M and N must live in the same space")
    n = M.shape[0]
    Ms = Subspace.span(M, tol)
    Ns = Subspace.span(N, tol)
    if Ms.dim + Ns.dim != n or Subspace.span(np.hstack([Ms.basis, Ns.basis]), tol).dim != n:
        raise InvalidParams("M and N must be complementary subspaces")
    Q = oblique_projection(Ms, Ns)
    P = Ms.projector()
    wit = make_factorization(Q, P, Q.conj().T @ Q, tol)
    ver = is_l2p(Q, tol)
    rng, ker = range_kernel(Q, tol)
    cert = {
        "idempotent": norm2(Q @ Q - Q),
        "range_angle": max_angle(rng, Ms),
        "kernel_angle": max_angle(ker, Ns),
        "in_l2p": ver.in_l2p,
        "witness_residual": wit.residual,
        "witness_optimal": wit.optimal,
    }
    return GalleryItem("oblique_projection", Q, {"n": n}, cert, {"A": P, "B": wit.B})


def _three_positive(params, tol):
    P1 = np.diag([1.0, 0.0]).astype(complex)
    J = np.ones((2, 2), dtype=complex)
    P2 = np.diag([0.0, 1.0]).astype(complex)
    T = P1 @ J @ P2
    ver = is_l2p(T, tol)
    cert = {
        "reconstruction": norm2(T - np.array([[0, 1], [0, 0]])),
        "in_l2p": ver.in_l2p,
        "reason": ver.reason,
    }
    return GalleryItem("three_positive_nilpotent", T, {"factors": 3}, cert, {"P1": P1, "J": J, "P2": P2})


def _nonunique(params, tol):
    R = float(params.get("R", 2.0))
    if not (np.isfinite(R) and R > 0 and R != 1):
        raise InvalidParams("R must be positive and different from 1")
    T = np.diag([R, 1 / R]).astype(complex)
    p = make_factorization(T, np.diag([R, 1.0]), np.diag([1.0, 1 / R]), tol)
    q = make_factorization(T, np.diag([1.0, 1 / R]), np.diag([R, 1.0]), tol)
    order = pair_leq(p, q, tol)
    cert = {
        "order": order.value,
        "incomparable": order is PairOrder.INCOMPARABLE,
        "residual_p": p.residual,
        "residual_q": q.residual,
    }
    return GalleryItem(
        "nonunique_minimal", T, {"R": R}, cert,
        {"A1": p.A, "B1": p.B, "A2": q.A, "B2": q.B},
    )


GALLERY = {
    "oblique_projection": _oblique,
    "three_positive_nilpotent": _three_positive,
    "nonunique_minimal": _nonunique,
}


def gallery(name: str, params: dict | None = None, tol: Tolerances = DEFAULT_TOL) -> GalleryItem:
    """Build a named example and its certificates."""
    try:
        builder = GALLERY[name]
    except KeyError:
        raise UnknownName(f"unknown gallery item {name!r}; choose from {sorted(GALLERY)}") from None
    return builder(params or {}, tol)


# ---------------------------------------------------------------------------
# sweeps


def default_angles(m: int) -> np.ndarray:
    """``theta_k = pi / 2^k`` for ``k = 1..m``."""
    return np.pi / 2.0 ** np.arange(1, m + 1)


def default_s(m: int) -> np.ndarray:
    """``s_k = 4^{-k}`` for ``k = 1..m``."""
    return 4.0 ** -np.arange(1, m + 1, dtype=float)


def _check_decreasing(x, lo, hi, what):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0 or not np.all(np.isfinite(x)):
        raise InvalidParams(f"{what} must be a non-empty list of finite numbers")
    if np.any(x <= lo) or np.any(x > hi):
        raise InvalidParams(f"{what} must lie in ({lo}, {hi}]")
    if np.any(np.diff(x) > 0):
        raise InvalidParams(f"{what} must be non-increasing")
    return x


def qs_operator(n: int, angles) -> np.ndarray:
    """``P_M P_{N^⊥}`` on ``C^n`` with ``M`` the first half of the coordinates."""
    m = n // 2
    th = np.asarray(angles[:m], dtype=float)
    c, s = np.cos(th), np.sin(th)
    # N is spanned by cos(th_k) e_k + sin(th_k) f_k; N^⊥ by the rotated vectors
    # -sin(th_k) e_k + cos(th_k) f_k together with nothing else in dimension 2m
    U = np.zeros((n, m))
    U[np.arange(m), np.arange(m)] = -s
    U[m + np.arange(m), np.arange(m)] = c
    Pperp = U @ U.T
    PM = np.diag(np.r_[np.ones(m), np.zeros(n - m)])
    return (PM @ Pperp).astype(complex)


def qs_not_sim_truncation(
    dims=(4, 8, 16, 32, 64), angles=None, tol: Tolerances = DEFAULT_TOL
) -> LabResult:
    """Products of two projections whose diagonalizing similarity blows up.

    Metric ``kappa`` is the condition number of the eigenvector matrix with
    unit columns; ``min_angle`` the smallest principal angle between ``M``
    and ``N``.
    """
    dims = [int(d) for d in dims]
    if not dims or any(d < 2 or d % 2 for d in dims):
        raise InvalidParams("dimensions must be even and at least 2")
    mmax = max(dims) // 2
    th = default_angles(mmax) if angles is None else _check_decreasing(angles, 0.0, np.pi / 2, "angles")
    if th.size < mmax:
        raise InvalidParams(f"need at least {mmax} angles, got {th.size}")
    res = LabResult("qs_not_sim", dims)
    verdicts = []
    for n in dims:
        m = n // 2
        T = qs_operator(n, th)
        kappa = eigvec_condition(T)
        Mb = Subspace(n, np.eye(n)[:, :m].astype(complex))
        Nb = np.zeros((n, m))
        Nb[np.arange(m), np.arange(m)] = np.cos(th[:m])
        Nb[m + np.arange(m), np.arange(m)] = np.sin(th[:m])
        ang = principal_angles(Mb, Subspace(n, Nb.astype(complex)))
        ev = np.linalg.eigvals(T)
        ver = is_l2p(T, tol)
        res.add(n, "kappa", float(kappa))
        res.add(n, "kappa_predicted", float(1 / np.tan(th[m - 1] / 2)))
        res.add(n, "min_angle", float(ang.min()))
        res.add(n, "eig_min_real", float(ev.real.min()))
        res.add(n, "eig_max_real", float(ev.real.max()))
        res.add(n, "in_l2p", bool(ver.in_l2p))
        res.add(n, "confidence", ver.confidence.value)
        verdicts.append(f"n={n}: in_l2p={ver.in_l2p} ({ver.confidence.value})")
    k = res.column("kappa")
    mono = all(b >= a for a, b in zip(k, k[1:]))
    res.verdicts = f"kappa nondecreasing: {mono}; " + "; ".join(verdicts)
    return res


def sqrtless_operator(s) -> np.ndarray:
    """``[[S, 0], [(1-S)^{1/2} S^{1/2}, 0]]`` with ``S = diag(s)``."""
    s = np.asarray(s, dtype=float)
    n = s.size
    T = np.zeros((2 * n, 2 * n), dtype=complex)
    T[np.arange(n), np.arange(n)] = s
    T[n + np.arange(n), np.arange(n)] = np.sqrt((1 - s) * s)
    return T


def sqrtless_truncation(dims=(2, 4, 8, 16), s=None, tol: Tolerances = DEFAULT_TOL) -> LabResult:
    """Square roots of members whose factor conditioning degrades with ``min s``.

    For each ``n`` the root of ``T_n`` is built from an invertible pair
    ``T_n = A B``; ``witness_cond`` is ``cond(B)``, which is scale free.
    """
    dims = [int(d) for d in dims]
    if not dims or any(d < 1 for d in dims):
        raise InvalidParams("dimensions must be positive")
    nmax = max(dims)
    sv = default_s(nmax) if s is None else _check_decreasing(s, 0.0, 1.0, "s")
    if sv.size < nmax:
        raise InvalidParams(f"need at least {nmax} values of s, got {sv.size}")
    if np.any(sv >= 1):
        raise InvalidParams("s must lie in (0, 1)")
    res = LabResult("sqrtless", dims)
    notes = []
    for n in dims:
        T = sqrtless_operator(sv[:n])
        try:
            R, f = sqrt_with_witness(T, tol)
        except (CertificateError, NotInClass) as exc:
            notes.append(f"n={n}: {exc}")
            res.add(n, "sqrt_ok", False)
            continue
        res.add(n, "sqrt_ok", True)
        res.add(n, "root_residual", float(norm2(R @ R - T)))
        res.add(n, "witness_cond", float(np.linalg.cond(f.B)))
        res.add(n, "eigvec_cond", float(eigvec_condition(T)))
        res.add(n, "min_s", float(sv[n - 1]))
        res.add(n, "root_in_l2p", bool(is_l2p(R, tol).in_l2p))
    w = res.column("witness_cond")
    mono = all(b >= a for a, b in zip(w, w[1:]))
    res.verdicts = f"witness_cond nondecreasing: {mono}" + ("; " + "; ".join(notes) if notes else "")
    return res


def compact_operator(lambdas, block_dims, angle=np.pi / 2, kernel_dim=0):
    """Member with eigenspace blocks tilted toward the first block.

    Returns ``(T, X, C)`` with ``T X = X C``.  Block ``j > 1`` (and the
    kernel block) uses columns ``cos(angle) e + sin(angle) f`` where ``e``
    runs over the first block and ``f`` over the block's own coordinates.
    """
    lam = np.asarray(lambdas, dtype=float)
    bd = [int(d) for d in block_dims]
    if lam.ndim != 1 or lam.size == 0 or np.any(~np.isfinite(lam)) or np.any(lam <= 0):
        raise InvalidParams("lambdas must be positive and finite")
    if len(bd) != lam.size or any(d < 1 for d in bd):
        raise InvalidParams("need one block dimension >= 1 per eigenvalue")
    if kernel_dim < 0:
        raise InvalidParams("kernel_dim must be >= 0")
    if not (0 < angle <= np.pi / 2):
        raise InvalidParams("angle must lie in (0, pi/2]; angle 0 makes blocks dependent")
    sizes = bd + ([int(kernel_dim)] if kernel_dim else [])
    alphas = list(np.sqrt(lam)) + ([1.0] if kernel_dim else [])
    evals = list(lam) + ([0.0] if kernel_dim else [])
    n = sum(sizes)
    d1 = sizes[0]
    E = np.zeros((n, n))
    a = np.zeros(n)
    cdiag = np.zeros(n)
    off = 0
    for j, d in enumerate(sizes):
        for i in range(d):
            col = off + i
            if j == 0:
                E[col, col] = 1.0
            else:
                E[i % d1, col] = np.cos(angle)
                E[col, col] = np.sin(angle)
            a[col] = alphas[j]
            cdiag[col] = evals[j]
        off += d
    X = (E * a).astype(complex)
    C = np.diag(cdiag).astype(complex)
    T = X @ C @ np.linalg.inv(X)
    return T, X, C


def compact_factor_truncation(
    lambdas=(1.0, 0.25), block_dims=None, angle=np.pi / 2, kernel_dim=0,
    tol: Tolerances = DEFAULT_TOL,
) -> LabResult:
    """Assemble ``T`` from eigenspace blocks and factor it as ``(X X^H)(Z Z^H)``.

    One row group per truncation level ``m = 1..len(lambdas)`` (the first
    ``m`` blocks).  ``Z`` solves ``X^H Z = C^{1/2}``.
    """
    lam = np.asarray(lambdas, dtype=float)
    bd = [1] * lam.size if block_dims is None else list(block_dims)
    if len(bd) != lam.size:
        raise InvalidParams("need one block dimension per eigenvalue")
    dims = []
    res = LabResult("compact_factor", dims)
    for m in range(1, lam.size + 1):
        T, X, C = compact_operator(lam[:m], bd[:m], angle, kernel_dim)
        n = T.shape[0]
        dims.append(n)
        scale = max(norm2(T), 1e-300)
        intertwine = norm2(T @ X - X @ C)
        Ch = np.diag(np.sqrt(np.clip(C.diagonal().real, 0, None))).astype(complex)
        Z = douglas_solve(X.conj().T, Ch, tol)
        A, B = X @ X.conj().T, Z @ Z.conj().T
        fac_resid = norm2(A @ B - T)
        ver = classify_subclass(T, tol)
        res.add(n, "intertwine_residual", float(intertwine / scale))
        res.add(n, "factor_residual", float(fac_resid / scale))
        res.add(n, "xhx_dominates_c", bool(loewner_leq(C, X.conj().T @ X, tol)))
        res.add(n, "eigvec_cond", float(eigvec_condition(T)))
        res.add(n, "z_norm", float(norm2(Z)))
        res.add(n, "in_l2p", bool(ver.in_l2p))
        res.add(n, "subclass", ver.subclass.value)
        res.matrices[n] = {"T": T, "X": X, "Z": Z}
    ok = all(res.column("in_l2p"))
    res.verdicts = f"all truncations in class: {ok}"
    return res


EXPERIMENTS = {
    "qs_not_sim": qs_not_sim_truncation,
    "sqrtless": sqrtless_truncation,
    "compact_factor": compact_factor_truncation,
}
