import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from posfact.core import norm2
from posfact.errors import InvalidParams, UnknownName
from posfact.factorization import PairOrder, pair_leq
from posfact.lab import (
    EXPERIMENTS,
    GALLERY,
    compact_factor_truncation,
    compact_operator,
    default_angles,
    default_s,
    gallery,
    qs_not_sim_truncation,
    sqrtless_operator,
    sqrtless_truncation,
)
from posfact.membership import Subclass, is_l2p

seeds = st.integers(0, 2**32 - 1)


# -- gallery


def test_oblique_gallery_default():
    g = gallery("oblique_projection")
    assert np.allclose(g.matrix, [[1, 1], [0, 0]])
    c = g.certificates
    assert c["in_l2p"] and c["witness_optimal"]
    assert c["idempotent"] <= 1e-12 and c["range_angle"] <= 1e-12 and c["kernel_angle"] <= 1e-12
    Q = g.matrix
    assert norm2(g.witnesses["B"] - Q.conj().T @ Q) == 0


def test_oblique_gallery_params():
    g = gallery("oblique_projection", {"M": [[1, 0], [0, 1], [0, 0]], "N": [[1], [1], [1]]})
    Q = g.matrix
    assert norm2(Q @ Q - Q) <= 1e-12 and g.certificates["in_l2p"]


def test_oblique_gallery_rejects_overlap():
    with pytest.raises(InvalidParams):
        gallery("oblique_projection", {"M": [[1], [0]], "N": [[2], [0]]})


def test_three_positive():
    g = gallery("three_positive_nilpotent")
    P1, J, P2 = g.witnesses["P1"], g.witnesses["J"], g.witnesses["P2"]
    assert np.array_equal(P1 @ J @ P2, np.array([[0, 1], [0, 0]]))
    assert not g.certificates["in_l2p"]


def test_nonunique_minimal():
    g = gallery("nonunique_minimal", {"R": 2})
    assert np.allclose(g.matrix, np.diag([2, 0.5]))
    assert g.certificates["incomparable"]
    w = g.witnesses
    assert pair_leq((w["A1"], w["B1"]), (w["A2"], w["B2"])) is PairOrder.INCOMPARABLE


def test_nonunique_rejects_one():
    with pytest.raises(InvalidParams):
        gallery("nonunique_minimal", {"R": 1})


def test_unknown_gallery():
    with pytest.raises(UnknownName):
        gallery("nope")


@pytest.mark.parametrize("name", sorted(GALLERY))
def test_gallery_certificates_pass(name):
    g = gallery(name)
    for key, val in g.certificates.items():
        if key.endswith(("residual", "idempotent", "angle")) or key == "reconstruction":
            assert val <= 1e-10, key


# -- schedules


def test_default_schedules():
    assert np.allclose(default_angles(3), [np.pi / 2, np.pi / 4, np.pi / 8])
    assert np.allclose(default_s(3), [1 / 4, 1 / 16, 1 / 64])


# -- quasi-similar sweep


def test_qs_constant_right_angle():
    res = qs_not_sim_truncation(dims=(4, 8, 16), angles=[np.pi / 2] * 8)
    assert max(res.column("kappa")) <= 10


def test_qs_default_increasing():
    res = qs_not_sim_truncation(dims=(4, 8, 16, 32))
    k = res.column("kappa")
    assert np.all(np.diff(k) > 0)
    assert len(res.dims) == 4 and all(len(res.column(m)) == 4 for m in ("kappa", "min_angle"))


def test_qs_small_case_spectrum():
    res = qs_not_sim_truncation(dims=(4,))
    (k,) = res.column("kappa")
    assert np.isfinite(k)
    assert res.column("eig_min_real")[0] >= -1e-12 and res.column("eig_max_real")[0] <= 1 + 1e-12
    assert res.column("in_l2p") == [True]


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_qs_monotone_random_schedule(seed):
    rng = np.random.default_rng(seed)
    th = np.sort(rng.uniform(1e-3, np.pi / 2, 16))[::-1]
    k = qs_not_sim_truncation(dims=(4, 8, 16, 32), angles=th).column("kappa")
    assert all(b >= a * (1 - 1e-10) for a, b in zip(k, k[1:]))


def test_qs_rejects_bad_schedule():
    with pytest.raises(InvalidParams):
        qs_not_sim_truncation(dims=(4,), angles=[0.1, 0.5])
    with pytest.raises(InvalidParams):
        qs_not_sim_truncation(dims=(3,))


# -- square-root sweep


def test_sqrtless_single_block():
    T = sqrtless_operator([0.25])
    assert np.allclose(T, [[0.25, 0], [np.sqrt(3) / 4, 0]])
    assert is_l2p(T).in_l2p
    res = sqrtless_truncation(dims=(1,), s=[0.25])
    assert res.column("sqrt_ok") == [True] and np.isfinite(res.column("witness_cond")[0])


def test_sqrtless_default_increasing():
    w = sqrtless_truncation(dims=(2, 4, 8)).column("witness_cond")
    assert np.all(np.diff(w) > 0)


def test_sqrtless_constant_bounded():
    w = sqrtless_truncation(dims=(2, 4, 8, 16), s=[0.5] * 16).column("witness_cond")
    assert max(w) <= 10 and max(w) - min(w) <= 1e-8 * max(w)


def test_sqrtless_roots_are_members():
    res = sqrtless_truncation(dims=(2, 4))
    assert all(res.column("root_in_l2p"))
    assert max(res.column("root_residual")) <= 1e-10


# -- compact construction


def test_compact_orthogonal_blocks():
    T, X, C = compact_operator([1.0, 0.25], [1, 1])
    assert np.allclose(T, np.diag([1.0, 0.25]))


def test_compact_tilted_blocks():
    res = compact_factor_truncation(lambdas=(1.0, 0.25), angle=np.pi / 4)
    T = res.matrices[2]["T"]
    assert norm2(T @ T.conj().T - T.conj().T @ T) > 1e-3
    assert res.column("in_l2p") == [True, True]
    assert max(res.column("factor_residual")) <= 1e-9


def test_compact_single_block():
    res = compact_factor_truncation(lambdas=(2.0,), block_dims=(3,))
    T = res.matrices[3]["T"]
    assert np.allclose(T, 2 * np.eye(3))
    assert res.column("subclass") == [Subclass.POS_PROJ.value]


def test_compact_bad_angle():
    with pytest.raises(InvalidParams):
        compact_operator([1.0], [1], angle=0.0)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_compact_random(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 4))
    lam = np.sort(rng.uniform(0.05, 2, k))[::-1]
    dims = rng.integers(1, 3, k)
    res = compact_factor_truncation(lambdas=lam, block_dims=dims,
                                    angle=rng.uniform(0.2, np.pi / 2),
                                    kernel_dim=int(rng.integers(0, 2)))
    assert max(res.column("intertwine_residual")) <= 1e-8
    assert all(res.column("in_l2p"))


# -- table output


def test_lab_result_outputs():
    res = EXPERIMENTS["qs_not_sim"](dims=(4, 8))
    csv = res.to_csv().splitlines()
    assert csv[0] == "dim,metric,value"
    assert len(csv) == 1 + len(res.metrics)
    d = res.to_dict()
    assert d["name"] == "qs_not_sim" and d["dims"] == [4, 8]
