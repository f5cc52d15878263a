import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mgnss.tensor import (contract_pair, fold_mode, frobenius_norm, generalized_fold,
                          generalized_unfold, relative_change, svd, svt, unfold_mode)
from oracles import contract_loops, nuclear_prox_factored, unfold_loops

dims_strategy = st.lists(st.integers(1, 4), min_size=1, max_size=5)


def test_mode1_unfolding_layout():
    i1, i2, i3 = np.meshgrid(range(2), range(2), range(2), indexing="ij")
    t = (i1 + 2 * i2 + 4 * i3).astype(float)
    np.testing.assert_array_equal(unfold_mode(t, 0), [[0, 2, 4, 6], [1, 3, 5, 7]])


def test_vector_unfolding():
    t = np.array([1.0, 2.0, 3.0])
    np.testing.assert_array_equal(unfold_mode(t, 0), t[:, None])


def test_unfold_matches_index_arithmetic(rng):
    t = rng.standard_normal((2, 3, 4))
    for k in range(3):
        np.testing.assert_array_equal(unfold_mode(t, k), unfold_loops(t, k))


def test_mode1_unfold_is_fortran_linearization(rng):
    t = rng.standard_normal((3, 4, 2))
    np.testing.assert_array_equal(unfold_mode(t, 0).ravel(order="F"), t.ravel(order="F"))


@settings(max_examples=50, deadline=None)
@given(dims=dims_strategy, data=st.data())
def test_fold_unfold_roundtrip(dims, data):
    t = np.arange(np.prod(dims), dtype=float).reshape(dims)
    k = data.draw(st.integers(0, len(dims) - 1))
    np.testing.assert_array_equal(fold_mode(unfold_mode(t, k), k, dims), t)


def test_fold_scalar_like():
    np.testing.assert_array_equal(fold_mode(np.array([[5.0]]), 0, (1, 1)), [[5.0]])


def test_fold_shape_mismatch():
    with pytest.raises(ValueError):
        fold_mode(np.zeros((2, 3)), 0, (2, 2))


def test_invalid_mode():
    with pytest.raises(ValueError):
        unfold_mode(np.zeros((2, 2)), 2)


def test_generalized_unfold_consistent_with_mode_unfold(rng):
    t = rng.standard_normal((2, 3, 4, 2))
    for k in range(4):
        rest = [j for j in range(4) if j != k]
        np.testing.assert_array_equal(generalized_unfold(t, [k], rest), unfold_mode(t, k))


def test_generalized_unfold_transpose(rng):
    t = rng.standard_normal((2, 3))
    np.testing.assert_array_equal(generalized_unfold(t, [1], [0]), t.T)


@settings(max_examples=50, deadline=None)
@given(dims=dims_strategy, data=st.data())
def test_generalized_roundtrip(dims, data):
    t = np.arange(np.prod(dims), dtype=float).reshape(dims)
    perm = data.draw(st.permutations(range(len(dims))))
    cut = data.draw(st.integers(0, len(dims)))
    rows, cols = list(perm[:cut]), list(perm[cut:])
    m = generalized_unfold(t, rows, cols)
    np.testing.assert_array_equal(generalized_fold(m, rows, cols, dims), t)


def test_generalized_fold_singletons():
    t = np.arange(6.0).reshape(1, 6, 1)
    m = generalized_unfold(t, [1], [0, 2])
    np.testing.assert_array_equal(generalized_fold(m, [1], [0, 2], (1, 6, 1)), t)


def test_generalized_errors():
    with pytest.raises(ValueError):
        generalized_unfold(np.zeros((2, 2, 2)), [0], [0, 1])
    with pytest.raises(ValueError):
        generalized_fold(np.zeros((2, 3)), [0], [1, 2], (2, 2, 2))


def test_svd_basic():
    assert np.allclose(svd(np.diag([3.0, 1.0])).s, [3, 1])
    assert np.all(svd(np.zeros((3, 2))).s == 0)


def test_svd_orthonormal(rng):
    m = rng.standard_normal((5, 4))
    u, s, vt = svd(m)
    np.testing.assert_allclose(u.T @ u, np.eye(4), atol=1e-10)
    np.testing.assert_allclose(vt @ vt.T, np.eye(4), atol=1e-10)
    assert np.all(np.diff(s) <= 0) and np.all(s >= 0)
    assert np.linalg.norm(u * s @ vt - m) / np.linalg.norm(m) <= 1e-10


def test_svd_rejects_nan():
    with pytest.raises(ValueError):
        svd(np.array([[np.nan, 1.0]]))


def test_svt_examples(rng):
    np.testing.assert_allclose(svt(np.diag([3.0, 1.0]), 2.0), np.diag([1.0, 0.0]), atol=1e-12)
    m = rng.standard_normal((4, 3))
    np.testing.assert_allclose(svt(m, 0.0), m, atol=1e-10)


def test_svt_weighted_thresholds():
    out = svt(np.diag([5.0, 3.0, 1.0]), [1.0, 2.5, 0.0])
    np.testing.assert_allclose(out, np.diag([4.0, 0.5, 1.0]), atol=1e-12)


def test_svt_errors():
    with pytest.raises(ValueError):
        svt(np.eye(2), -1.0)
    with pytest.raises(ValueError):
        svt(np.eye(3), [1.0, 2.0])


def test_svt_matches_prox_oracle(rng):
    m = rng.standard_normal((4, 4))
    tau = 0.7
    np.testing.assert_allclose(svt(m, tau), nuclear_prox_factored(m, tau), atol=1e-6)


def test_svt_output_spectrum(rng):
    m = rng.standard_normal((4, 6))
    tau = 0.9
    s_in = np.linalg.svd(m, compute_uv=False)
    s_out = np.linalg.svd(svt(m, tau), compute_uv=False)
    np.testing.assert_allclose(s_out, np.maximum(s_in - tau, 0), atol=1e-9)


def test_contract_pair_vectors_and_matrices(rng):
    a, b = rng.standard_normal(3), rng.standard_normal(3)
    assert np.isclose(contract_pair(a, b, [(0, 0)]), a @ b)
    p, q = rng.standard_normal((2, 3)), rng.standard_normal((3, 4))
    np.testing.assert_allclose(contract_pair(p, q, [(1, 0)]), p @ q, atol=1e-14)


def test_contract_pair_nested_loops(rng):
    a = rng.standard_normal((2, 3, 2))
    b = rng.standard_normal((3, 2, 3))
    axes = [(1, 0), (2, 1)]
    np.testing.assert_allclose(contract_pair(a, b, axes), contract_loops(a, b, axes), atol=1e-12)


def test_contract_pair_length_mismatch():
    with pytest.raises(ValueError):
        contract_pair(np.zeros(3), np.zeros(2), [(0, 0)])


def test_norms():
    assert frobenius_norm(np.ones((2, 2))) == 2.0
    t = np.arange(1.0, 7.0).reshape(2, 3)
    assert relative_change(t, t) == 0.0
    assert np.isclose(relative_change(2 * t, t), 1.0)
    assert relative_change(np.zeros(3), np.zeros(3)) == 0.0
    with pytest.raises(ValueError):
        relative_change(np.zeros(3), np.zeros(4))
