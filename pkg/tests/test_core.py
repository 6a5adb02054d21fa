import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ufmcollapse.core import (Frame, NumericalError, ProblemDims, build_label_matrix,
                              general_simplex_etf, nuclear_norm, pseudoinverse, random_orthonormal,
                              standard_simplex_etf)


def test_dims_derive_N():
    assert ProblemDims(4, 20, 50).N == 200


@pytest.mark.parametrize("bad", [0, -1, 2.5])
def test_dims_reject_non_positive(bad):
    with pytest.raises(ValueError):
        ProblemDims(bad, 3, 3)


def test_label_matrix_is_class_major():
    Y = build_label_matrix(ProblemDims(3, 2, 2))
    expected = np.array([[1, 1, 0, 0, 0, 0], [0, 0, 1, 1, 0, 0], [0, 0, 0, 0, 1, 1]], float)
    np.testing.assert_array_equal(Y, expected)


def test_frame_rejects_non_orthonormal():
    with pytest.raises(ValueError):
        Frame(np.ones((3, 2)))
    with pytest.raises(ValueError):
        Frame(np.eye(2, 3))


def test_frame_is_read_only():
    f = Frame.axis_aligned(4, 2)
    with pytest.raises(ValueError):
        f.P[0, 0] = 2.0


def test_random_orthonormal_deterministic():
    a = random_orthonormal(7, 3, 5).P
    b = random_orthonormal(7, 3, 5).P
    np.testing.assert_array_equal(a, b)
    np.testing.assert_allclose(a.T @ a, np.eye(3), atol=1e-14)


@pytest.mark.parametrize("K", [2, 3, 4, 7])
def test_standard_simplex_etf_gram(K):
    M = standard_simplex_etf(K)
    G = M.T @ M
    np.testing.assert_allclose(np.diag(G), 1.0, atol=1e-14)
    off = G[~np.eye(K, dtype=bool)]
    np.testing.assert_allclose(off, -1.0 / (K - 1), atol=1e-14)
    np.testing.assert_allclose(M.sum(axis=1), 0.0, atol=1e-14)


def test_simplex_etf_rejects_small_K():
    with pytest.raises(ValueError):
        standard_simplex_etf(1)


def test_general_simplex_etf_preserves_gram():
    frame = random_orthonormal(9, 4, 0)
    M = general_simplex_etf(4, 9, frame)
    S = standard_simplex_etf(4)
    np.testing.assert_allclose(M.T @ M, S.T @ S, atol=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2 ** 32 - 1))
def test_pseudoinverse_penrose_conditions(rows, cols, seed):
    rng = np.random.default_rng(seed)
    rank = rng.integers(1, min(rows, cols) + 1)
    M = rng.standard_normal((rows, rank)) @ rng.standard_normal((rank, cols))
    P = pseudoinverse(M)
    np.testing.assert_allclose(M @ P @ M, M, atol=1e-9 * max(1, np.abs(M).max()))
    np.testing.assert_allclose(P @ M @ P, P, atol=1e-8 * max(1, np.abs(P).max()))
    np.testing.assert_allclose(np.linalg.pinv(M), P, atol=1e-8 * max(1, np.abs(P).max()))


def test_pseudoinverse_of_zero():
    np.testing.assert_array_equal(pseudoinverse(np.zeros((3, 2))), np.zeros((2, 3)))


def test_pseudoinverse_rejects_nan():
    with pytest.raises(ValueError):
        pseudoinverse(np.array([[np.nan]]))


def test_nuclear_norm_matches_singular_values(rng):
    M = rng.standard_normal((5, 3))
    assert nuclear_norm(M) == pytest.approx(np.linalg.svd(M, compute_uv=False).sum(), rel=1e-14)
    assert isinstance(NumericalError("x"), RuntimeError)
