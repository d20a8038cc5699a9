import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import crand
from jacobi_opt.manifold import random_unitary
from jacobi_opt.tensor import (
    TensorShapeError,
    as_tensor,
    diag_vector,
    example_7_1_tensor,
    frobenius_norm_sq,
    is_hermitian_tensor,
    load_tensor,
    mode_product,
    multi_mode_product,
    real_inner,
    save_tensor,
    subtensor,
    symmetrize,
    tensor_from_dict,
    tensor_to_dict,
    unfold,
)


def loop_mode_product(T, X, p):
    shape = list(T.shape)
    shape[p] = X.shape[0]
    out = np.zeros(shape, dtype=complex)
    for idx in itertools.product(*map(range, shape)):
        for q in range(T.shape[p]):
            src = list(idx)
            src[p] = q
            out[idx] += T[tuple(src)] * X[idx[p], q]
    return out


def test_mode_product_swap_example():
    T = np.array([[1, 2], [3, 4]])
    X = np.array([[0, 1], [1, 0]])
    np.testing.assert_array_equal(mode_product(T, X, 0), [[3, 4], [1, 2]])


def test_mode_product_matches_loops(rng):
    T = crand(rng, (2, 3, 4))
    for p in range(3):
        X = crand(rng, (5, T.shape[p]))
        np.testing.assert_allclose(mode_product(T, X, p), loop_mode_product(T, X, p), atol=1e-12)


def test_mode_product_identity_and_errors(rng):
    T = crand(rng, (2, 3))
    np.testing.assert_array_equal(mode_product(T, np.eye(3), 1), T)
    with pytest.raises(TensorShapeError):
        mode_product(T, np.eye(2), 1)
    with pytest.raises((TensorShapeError, ValueError)):
        mode_product(T, np.eye(2), 5)


def test_mode_products_commute(rng):
    T = crand(rng, (3, 4, 2))
    X, Y = crand(rng, (2, 3)), crand(rng, (5, 4))
    a = mode_product(mode_product(T, X, 0), Y, 1)
    b = mode_product(mode_product(T, Y, 1), X, 0)
    assert np.linalg.norm(a - b) <= 1e-12 * np.linalg.norm(a)


def test_example_tensor_facts():
    A = example_7_1_tensor()
    assert A.shape == (3, 3, 3)
    assert frobenius_norm_sq(A) == 1215
    np.testing.assert_array_equal(diag_vector(A), [8, 3, 5])
    assert subtensor(A, (1, 1, 1)).item() == 8
    np.testing.assert_array_equal(multi_mode_product(A, [np.eye(3)] * 3), A)


def test_diag_vector_min_dimension():
    np.testing.assert_array_equal(diag_vector(np.eye(3)), [1, 1, 1])
    np.testing.assert_array_equal(diag_vector(np.array([[1, 2, 3], [4, 5, 6]])), [1, 5])


def test_subtensor_cases(rng):
    T = crand(rng, (3, 4, 2))
    np.testing.assert_array_equal(subtensor(T, T.shape), T)
    np.testing.assert_array_equal(subtensor(np.eye(3), (2, 2)), np.eye(2))
    np.testing.assert_array_equal(subtensor(subtensor(T, (3, 3, 2)), (2, 1, 1)), subtensor(T, (2, 1, 1)))
    np.testing.assert_array_equal(diag_vector(subtensor(T, (2, 2, 2))), diag_vector(T))
    with pytest.raises((TensorShapeError, ValueError)):
        subtensor(T, (4, 1, 1))
    with pytest.raises((TensorShapeError, ValueError)):
        subtensor(T, (0, 1, 1))


def test_frobenius_norm(rng):
    assert frobenius_norm_sq(np.zeros((2, 2))) == 0
    T = crand(rng, (3, 3, 3))
    U = random_unitary(3, rng)
    assert np.isclose(frobenius_norm_sq(mode_product(T, U, 1)), frobenius_norm_sq(T), rtol=1e-10)


def test_real_inner(rng):
    I = np.eye(2)
    assert real_inner(I, I) == 2
    assert real_inner(1j * I, I) == 0
    X, Y = crand(rng, (3, 2)), crand(rng, (3, 2))
    want = np.sum(X.real * Y.real + X.imag * Y.imag)
    assert np.isclose(real_inner(X, Y), want, rtol=1e-13)
    with pytest.raises((TensorShapeError, ValueError)):
        real_inner(X, Y.T)


def test_hermitian_predicate(rng):
    H = crand(rng, (2, 2))
    assert is_hermitian_tensor(H + H.conj().T, 1)
    assert not is_hermitian_tensor(np.array([[0, 1], [0, 0]]), 1)
    A = crand(rng, (3, 3))
    # B_{ij,kl} = conj(A_ij) A_kl
    B = np.multiply.outer(A.conj(), A)
    assert is_hermitian_tensor(B, 2)
    with pytest.raises((TensorShapeError, ValueError)):
        is_hermitian_tensor(crand(rng, (2, 2, 2)), 1)


def test_as_tensor_rejects_nonfinite():
    with pytest.raises((TensorShapeError, ValueError)):
        as_tensor([1.0, np.nan])
    with pytest.raises((TensorShapeError, ValueError)):
        as_tensor([1.0, 2.0, 3.0], dims=(2, 2))


def test_file_round_trip_first_index_fastest(tmp_path, rng):
    T = crand(rng, (2, 3, 2))
    obj = tensor_to_dict(T)
    assert obj["dims"] == [2, 3, 2]
    # first-index-fastest: the second stored entry is T[1, 0, 0]
    assert obj["data"][1] == [T[1, 0, 0].real, T[1, 0, 0].imag]
    np.testing.assert_array_equal(tensor_from_dict(obj), T)
    save_tensor(tmp_path / "t.json", T)
    np.testing.assert_array_equal(load_tensor(tmp_path / "t.json"), T)


def test_unfold_columns(rng):
    T = crand(rng, (2, 3, 4))
    M = unfold(T, 1)
    assert M.shape == (3, 8)
    assert np.isclose(frobenius_norm_sq(M), frobenius_norm_sq(T))


def test_symmetrize_is_permutation_invariant(rng):
    S = symmetrize(crand(rng, (3, 3, 3)))
    for perm in itertools.permutations(range(3)):
        np.testing.assert_allclose(np.transpose(S, perm), S, atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(
    dims=st.lists(st.integers(1, 4), min_size=1, max_size=4),
    seed=st.integers(0, 2**31 - 1),
)
def test_unitary_mode_product_isometry(dims, seed):
    rng = np.random.default_rng(seed)
    T = crand(rng, tuple(dims))
    p = seed % len(dims)
    U = random_unitary(dims[p], rng)
    assert np.isclose(frobenius_norm_sq(mode_product(T, U, p)), frobenius_norm_sq(T), rtol=1e-10, atol=1e-12)
