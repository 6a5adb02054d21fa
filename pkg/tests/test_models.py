import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ufmcollapse.core import ProblemDims, build_label_matrix
from ufmcollapse.models import (BiasMode, Hyperparams, PlainState, TwoLayerState, Variant, evaluate,
                                finite_diff_gradient, optimal_bias)
from ufmcollapse.optim import InitSpec, init_state

PLAIN = Hyperparams(lambda_W=0.01, lambda_H=0.02)
TWO = Hyperparams(lambda_W2=0.01, lambda_W1=0.02, lambda_H1=0.03)


def _hyper(variant):
    if not variant.is_plain:
        return TWO
    return Hyperparams(0.01, 0.02, bias_mode=variant.bias_mode,
                       lambda_b=0.05 if variant is Variant.PLAIN_REG_BIAS else None)


def _rel_err(a, b):
    num = np.sqrt(sum(np.vdot(x - y, x - y) for x, y in zip(a, b)))
    return num / max(b.norm(), 1e-30)


@pytest.mark.parametrize("variant", list(Variant))
def test_gradient_matches_finite_differences(variant, small_dims):
    Y = build_label_matrix(small_dims)
    hyper = _hyper(variant)
    state = init_state(variant, small_dims, InitSpec(scale=0.7, seed=3))
    res = evaluate(variant, state, Y, small_dims, hyper)
    fd = finite_diff_gradient(lambda s: evaluate(variant, s, Y, small_dims, hyper).objective, state)
    assert _rel_err(res.grad, fd) <= 1e-6


def test_plain_objective_by_hand():
    dims = ProblemDims(2, 1, 1)
    W = np.array([[1.0], [2.0]])
    H = np.array([[1.0, -1.0]])
    b = np.array([0.5, 0.0])
    Y = build_label_matrix(dims)
    hyper = Hyperparams(0.1, 0.2, bias_mode="regularized", lambda_b=0.4)
    # residual W H + b - Y = [[0.5, -0.5], [2, -3]]
    expected = 0.5 * (0.25 + 0.25 + 4 + 9) / 2 + 0.05 * 5 + 0.1 * 2 + 0.2 * 0.25
    assert evaluate(Variant.PLAIN_REG_BIAS, PlainState(W, H, b), Y, dims, hyper).objective == \
        pytest.approx(expected, rel=1e-15)


def test_relu_matches_linear_on_nonnegative_preactivations(small_dims, rng):
    Y = build_label_matrix(small_dims)
    W1 = np.abs(rng.standard_normal((small_dims.d, small_dims.d)))
    H1 = np.abs(rng.standard_normal((small_dims.d, small_dims.N)))
    state = TwoLayerState(rng.standard_normal((small_dims.K, small_dims.d)), W1, H1)
    lin = evaluate(Variant.TWO_LAYER_LINEAR, state, Y, small_dims, TWO)
    rel = evaluate(Variant.TWO_LAYER_RELU, state, Y, small_dims, TWO)
    assert lin.objective == rel.objective


def test_optimal_bias_zeroes_bias_gradient(small_dims, rng):
    Y = build_label_matrix(small_dims)
    W = rng.standard_normal((small_dims.K, small_dims.d))
    H = rng.standard_normal((small_dims.d, small_dims.N))
    b = optimal_bias(W, H, Y, small_dims)
    hyper = Hyperparams(0.1, 0.1, bias_mode=BiasMode.UNREGULARIZED)
    res = evaluate(Variant.PLAIN_UNREG_BIAS, PlainState(W, H, b), Y, small_dims, hyper)
    np.testing.assert_allclose(res.grad.b, 0.0, atol=1e-15)


def test_shape_and_finiteness_checks(small_dims):
    Y = build_label_matrix(small_dims)
    bad = PlainState(np.zeros((small_dims.K, small_dims.d + 1)), np.zeros((small_dims.d, small_dims.N)))
    with pytest.raises(ValueError):
        evaluate(Variant.PLAIN_BIAS_FREE, bad, Y, small_dims, PLAIN)
    nan = PlainState(np.full((small_dims.K, small_dims.d), np.nan), np.zeros((small_dims.d, small_dims.N)))
    with pytest.raises(ValueError):
        evaluate(Variant.PLAIN_BIAS_FREE, nan, Y, small_dims, PLAIN)


def test_hyperparams_validation():
    with pytest.raises(ValueError):
        Hyperparams(lambda_W=-1.0)
    with pytest.raises(ValueError):
        Hyperparams(0.1, 0.1, bias_mode="regularized")
    with pytest.raises(ValueError):
        Hyperparams(lambda_W=0.1).require("lambda_H")


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(list(Variant)), st.integers(0, 2 ** 32 - 1),
       st.floats(1e-3, 1.0), st.floats(1e-3, 1.0))
def test_objective_nonnegative_and_scaling_invariant(variant, seed, lam1, lam2):
    dims = ProblemDims(2, 3, 2)
    Y = build_label_matrix(dims)
    if variant.is_plain:
        hyper = Hyperparams(lam1, lam2, bias_mode=variant.bias_mode,
                            lambda_b=lam1 if variant is Variant.PLAIN_REG_BIAS else None)
    else:
        hyper = Hyperparams(lambda_W2=lam1, lambda_W1=lam2, lambda_H1=lam1)
    state = init_state(variant, dims, InitSpec(seed=seed))
    f = evaluate(variant, state, Y, dims, hyper).objective
    assert f >= 0.0
    if variant.is_plain and variant.bias_mode is BiasMode.BIAS_FREE:
        # W -> tW, H -> H/t keeps the fit term and only moves the penalties
        t = 1.7
        scaled = PlainState(t * state.W, state.H / t)
        g = evaluate(variant, scaled, Y, dims, hyper).objective
        fit = f - 0.5 * lam1 * np.vdot(state.W, state.W) - 0.5 * lam2 * np.vdot(state.H, state.H)
        g_fit = g - 0.5 * lam1 * t * t * np.vdot(state.W, state.W) - 0.5 * lam2 * np.vdot(state.H, state.H) / t / t
        assert g_fit == pytest.approx(fit, rel=1e-9, abs=1e-12)
