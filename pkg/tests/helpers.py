"""Random corpora shared by the test modules."""

import numpy as np


def rand_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def rand_psd(rng, n, rank=None):
    r = int(rng.integers(0, n + 1)) if rank is None else rank
    X = rand_complex(rng, n, r)
    return X @ X.conj().T


def rand_pd(rng, n):
    return rand_psd(rng, n, n) + 0.1 * np.eye(n)


def rand_projection(rng, n, rank=None):
    r = int(rng.integers(0, n + 1)) if rank is None else rank
    Q, _ = np.linalg.qr(rand_complex(rng, n, n))
    V = Q[:, :r]
    return V @ V.conj().T


def rand_member(rng, nmax=8):
    """``A B`` for random PSD ``A, B`` of random rank, ``n <= nmax``."""
    n = int(rng.integers(1, nmax + 1))
    return rand_psd(rng, n) @ rand_psd(rng, n)


def member_corpus(count, seed, nmax=8):
    rng = np.random.default_rng(seed)
    return [rand_member(rng, nmax) for _ in range(count)]


def rand_similar(rng, lams, cond_max=1e3):
    """``G diag(lams) G^{-1}`` with ``cond(G) <= cond_max``."""
    n = len(lams)
    while True:
        G = rand_complex(rng, n, n)
        if np.linalg.cond(G) <= cond_max:
            break
    return G @ np.diag(np.asarray(lams, dtype=complex)) @ np.linalg.inv(G)


def clustered_member(rng, nmax=8):
    """Diagonalizable member whose spectrum has repeated eigenvalues."""
    n = int(rng.integers(2, nmax + 1))
    k = int(rng.integers(1, n))
    pool = np.concatenate([[0.0], rng.uniform(0.2, 3.0, k)])
    lams = rng.choice(pool, size=n)
    lams[0] = pool[1]
    return rand_similar(rng, lams)


def schur_oracle(B, V):
    """Classical generalized Schur complement to ``S = span(V)``, orthonormal ``V``.

    Works in the basis ``[V, V_perp]``: ``B/S = B22 - B21 pinv(B11) B12``
    placed on ``S^perp``.
    """
    n = B.shape[0]
    Q, _ = np.linalg.qr(np.hstack([V, rand_complex(np.random.default_rng(0), n, n - V.shape[1])]))
    Q = np.hstack([V, Q[:, V.shape[1]:]])
    C = Q.conj().T @ B @ Q
    k = V.shape[1]
    B11, B12, B22 = C[:k, :k], C[:k, k:], C[k:, k:]
    S = B22 - B12.conj().T @ np.linalg.pinv(B11, rcond=1e-12, hermitian=True) @ B12
    W = Q[:, k:]
    return W @ S @ W.conj().T
