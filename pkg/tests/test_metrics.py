import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ufmcollapse.core import ProblemDims, general_simplex_etf, random_orthonormal
from ufmcollapse.metrics import (class_means, features_report, level_names, nc1, nc2_etf, nc2_of, nc3,
                                 nc_report, scatter_matrices)
from ufmcollapse.models import TwoLayerState, Variant

DIMS = ProblemDims(4, 10, 6)


def _collapsed(Hbar, n):
    return np.repeat(Hbar, n, axis=1)


def test_class_means_order():
    dims = ProblemDims(2, 1, 3)
    H = np.array([[1.0, 2.0, 3.0, 10.0, 20.0, 30.0]])
    Hbar, hG = class_means(H, dims)
    np.testing.assert_allclose(Hbar, [[2.0, 20.0]])
    np.testing.assert_allclose(hG, [11.0])


def test_scatter_normalization():
    dims = ProblemDims(2, 1, 2)
    H = np.array([[0.0, 2.0, 4.0, 6.0]])
    sp = scatter_matrices(H, dims)
    assert sp.sigma_W[0, 0] == pytest.approx(1.0)
    assert sp.sigma_B[0, 0] == pytest.approx(4.0)


def test_nc1_zero_on_collapsed_features(rng):
    Hbar = rng.standard_normal((DIMS.d, DIMS.K))
    assert nc1(_collapsed(Hbar, DIMS.n), DIMS) == 0.0


def test_nc1_positive_with_spread(rng):
    H = _collapsed(rng.standard_normal((DIMS.d, DIMS.K)), DIMS.n) + 0.1 * rng.standard_normal((DIMS.d, DIMS.N))
    assert nc1(H, DIMS) > 0


def test_nc1_degenerate_flag():
    flags = []
    assert nc1(np.ones((DIMS.d, DIMS.N)), DIMS, flags) == 0.0
    assert flags


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(1e-3, 1e3))
def test_nc2_of_zero_on_scaled_orthogonal_frames(seed, scale):
    P = random_orthonormal(DIMS.d, DIMS.K, seed).P
    assert nc2_of(scale * P) <= 1e-14


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(1e-3, 1e3))
def test_nc2_etf_zero_on_simplex_etf(seed, scale):
    M = general_simplex_etf(DIMS.K, DIMS.d, random_orthonormal(DIMS.d, DIMS.K, seed))
    assert nc2_etf(scale * M) <= 1e-14


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(1e-2, 1e2))
def test_centered_orthogonal_frame_is_simplex_etf(seed, scale):
    P = scale * random_orthonormal(DIMS.d, DIMS.K, seed).P
    assert nc2_etf(P, center=True) <= 1e-10
    assert nc2_etf(P, center=False) > 0.1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_nc3_positive_scale_invariant(seed, a, b):
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((DIMS.K, DIMS.d))
    Hbar = rng.standard_normal((DIMS.d, DIMS.K))
    assert nc3(a * W, b * Hbar) == pytest.approx(nc3(W, Hbar), rel=1e-12, abs=1e-15)


def test_nc3_zero_on_aligned_pair(rng):
    Hbar = rng.standard_normal((DIMS.d, DIMS.K))
    assert nc3(3.0 * Hbar.T, Hbar) <= 1e-15


def test_degenerate_sentinels():
    flags = []
    Z = np.zeros((DIMS.d, DIMS.K))
    assert nc2_of(Z, flags) == 1.0
    assert nc2_etf(Z, flags=flags) == 1.0
    assert nc3(np.zeros((DIMS.K, DIMS.d)), Z, flags) == 1.0
    assert len(flags) == 3


def test_report_levels_by_variant(rng):
    assert level_names(Variant.PLAIN_REG_BIAS) == ("h",)
    assert level_names(Variant.TWO_LAYER_LINEAR) == ("h1", "h2")
    assert level_names(Variant.TWO_LAYER_RELU) == ("h1", "pre", "post")
    st_ = TwoLayerState(rng.standard_normal((DIMS.K, DIMS.d)), rng.standard_normal((DIMS.d, DIMS.d)),
                        rng.standard_normal((DIMS.d, DIMS.N)))
    rep = nc_report(st_, DIMS, "relu")
    assert tuple(rep.levels) == ("h1", "pre", "post")
    assert set(rep.to_dict()["levels"]["post"]) == {"nc1", "nc2_etf", "nc2_of"}


def test_features_report_without_weights(rng):
    rep = features_report({"h": rng.standard_normal((DIMS.d, DIMS.N))}, None, DIMS)
    assert rep.nc3 is None


def test_wrong_column_count():
    with pytest.raises(ValueError):
        nc1(np.zeros((3, DIMS.N + 1)), DIMS)
