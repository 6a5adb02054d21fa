"""Objectives and analytic gradients for the plain and two-layer unconstrained features models."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterator, Union

import numpy as np

from .core import ProblemDims, check_finite


class BiasMode(str, Enum):
    BIAS_FREE = "bias_free"
    UNREGULARIZED = "unregularized"
    REGULARIZED = "regularized"


class Variant(str, Enum):
    PLAIN_BIAS_FREE = "plain_bias_free"
    PLAIN_UNREG_BIAS = "plain_unreg_bias"
    PLAIN_REG_BIAS = "plain_reg_bias"
    TWO_LAYER_LINEAR = "two_layer_linear"
    TWO_LAYER_RELU = "two_layer_relu"

    @property
    def is_plain(self) -> bool:
        return self.value.startswith("plain")

    @property
    def bias_mode(self) -> BiasMode:
        return {
            Variant.PLAIN_UNREG_BIAS: BiasMode.UNREGULARIZED,
            Variant.PLAIN_REG_BIAS: BiasMode.REGULARIZED,
        }.get(self, BiasMode.BIAS_FREE)

    @property
    def activation(self) -> str | None:
        if self is Variant.TWO_LAYER_LINEAR:
            return "linear"
        if self is Variant.TWO_LAYER_RELU:
            return "relu"
        return None


@dataclass(frozen=True)
class Hyperparams:
    lambda_W: float | None = None
    lambda_H: float | None = None
    lambda_W2: float | None = None
    lambda_W1: float | None = None
    lambda_H1: float | None = None
    bias_mode: BiasMode = BiasMode.BIAS_FREE
    lambda_b: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "bias_mode", BiasMode(self.bias_mode))
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if f.name.startswith("lambda") and value is not None and not value > 0:
                raise ValueError(f"{f.name} must be positive, got {value!r}")
        if self.bias_mode is BiasMode.REGULARIZED and self.lambda_b is None:
            raise ValueError("regularized bias needs lambda_b")

    def require(self, *names: str) -> tuple[float, ...]:
        missing = [name for name in names if getattr(self, name) is None]
        if missing:
            raise ValueError(f"missing hyperparameters: {', '.join(missing)}")
        return tuple(float(getattr(self, name)) for name in names)


class _ParamBundle:
    """Shared helpers for the state dataclasses; gradients reuse the same classes."""

    _fields: tuple[str, ...] = ()

    def params(self) -> dict[str, np.ndarray]:
        return {f: getattr(self, f) for f in self._fields if getattr(self, f) is not None}

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self.params().values())

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def copy(self):
        return self.replace(**{k: v.copy() for k, v in self.params().items()})

    def norm(self) -> float:
        return float(np.sqrt(sum(np.vdot(v, v) for v in self)))

    def axpy(self, alpha: float, other):
        """Return ``self + alpha * other`` blockwise."""
        theirs = other.params()
        return self.replace(**{k: v + alpha * theirs[k] for k, v in self.params().items()})


@dataclass
class PlainState(_ParamBundle):
    W: np.ndarray
    H: np.ndarray
    b: np.ndarray | None = None

    _fields = ("W", "H", "b")


@dataclass
class TwoLayerState(_ParamBundle):
    W2: np.ndarray
    W1: np.ndarray
    H1: np.ndarray

    _fields = ("W2", "W1", "H1")


ModelState = Union[PlainState, TwoLayerState]


@dataclass
class EvalResult:
    objective: float
    grad: ModelState


def _expect_shape(name: str, M: np.ndarray, shape: tuple[int, ...]) -> None:
    if M.shape != shape:
        raise ValueError(f"{name} has shape {M.shape}, expected {shape}")


def eval_plain(state: PlainState, Y: np.ndarray, dims: ProblemDims, hyper: Hyperparams,
               check: bool = True) -> EvalResult:
    """Regularized MSE of ``W H + b 1^T`` against ``Y`` and its gradient."""
    lam_W, lam_H = hyper.require("lambda_W", "lambda_H")
    mode = hyper.bias_mode
    W, H, b = state.W, state.H, state.b
    if check:
        _expect_shape("W", W, (dims.K, dims.d))
        _expect_shape("H", H, (dims.d, dims.N))
        _expect_shape("Y", Y, (dims.K, dims.N))
        if (b is None) != (mode is BiasMode.BIAS_FREE):
            raise ValueError(f"bias presence does not match bias mode {mode.value}")
        for name, M in state.params().items():
            check_finite(name, M)
        if b is not None:
            _expect_shape("b", b, (dims.K,))

    R = W @ H - Y
    if b is not None:
        R += b[:, None]
    obj = 0.5 * np.vdot(R, R) / dims.N + 0.5 * lam_W * np.vdot(W, W) + 0.5 * lam_H * np.vdot(H, H)
    R /= dims.N
    gW = R @ H.T + lam_W * W
    gH = W.T @ R + lam_H * H
    gb = None
    if b is not None:
        gb = R.sum(axis=1)
        if mode is BiasMode.REGULARIZED:
            lam_b = float(hyper.lambda_b)
            obj += 0.5 * lam_b * np.vdot(b, b)
            gb += lam_b * b
    return EvalResult(float(obj), PlainState(gW, gH, gb))


def optimal_bias(W: np.ndarray, H: np.ndarray, Y: np.ndarray, dims: ProblemDims) -> np.ndarray:
    """Bias minimizing the unregularized-bias objective for fixed ``W H``."""
    _expect_shape("W", W, (dims.K, dims.d))
    _expect_shape("H", H, (dims.d, dims.N))
    _expect_shape("Y", Y, (dims.K, dims.N))
    return (Y - W @ H).sum(axis=1) / dims.N


def relu(Z: np.ndarray) -> np.ndarray:
    return np.maximum(Z, 0.0)


def eval_two_layer(state: TwoLayerState, Y: np.ndarray, dims: ProblemDims, hyper: Hyperparams,
                   activation: str = "linear", check: bool = True) -> EvalResult:
    """Objective and gradient of ``W2 act(W1 H1)`` with three Frobenius penalties.

    The ReLU derivative at exactly zero is taken to be 0.
    """
    lam_W2, lam_W1, lam_H1 = hyper.require("lambda_W2", "lambda_W1", "lambda_H1")
    if activation not in ("linear", "relu"):
        raise ValueError(f"unknown activation {activation!r}")
    W2, W1, H1 = state.W2, state.W1, state.H1
    if check:
        _expect_shape("W2", W2, (dims.K, dims.d))
        _expect_shape("W1", W1, (dims.d, dims.d))
        _expect_shape("H1", H1, (dims.d, dims.N))
        _expect_shape("Y", Y, (dims.K, dims.N))
        for name, M in state.params().items():
            check_finite(name, M)

    Z = W1 @ H1
    A = relu(Z) if activation == "relu" else Z
    R = W2 @ A - Y
    obj = (0.5 * np.vdot(R, R) / dims.N + 0.5 * lam_W2 * np.vdot(W2, W2)
           + 0.5 * lam_W1 * np.vdot(W1, W1) + 0.5 * lam_H1 * np.vdot(H1, H1))
    R /= dims.N
    G = W2.T @ R
    if activation == "relu":
        G *= Z > 0
    gW2 = R @ A.T + lam_W2 * W2
    gW1 = G @ H1.T + lam_W1 * W1
    gH1 = W1.T @ G + lam_H1 * H1
    return EvalResult(float(obj), TwoLayerState(gW2, gW1, gH1))


def evaluate(variant: Variant, state: ModelState, Y: np.ndarray, dims: ProblemDims,
             hyper: Hyperparams, check: bool = True) -> EvalResult:
    variant = Variant(variant)
    if variant.is_plain:
        if hyper.bias_mode is not variant.bias_mode:
            hyper = dataclasses.replace(hyper, bias_mode=variant.bias_mode)
        return eval_plain(state, Y, dims, hyper, check=check)
    return eval_two_layer(state, Y, dims, hyper, activation=variant.activation, check=check)


def finite_diff_gradient(objective: Callable[[ModelState], float], state: ModelState,
                         eps: float = 1e-6) -> ModelState:
    """Central-difference gradient, one coordinate at a time."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    work = state.copy()
    grads = {}
    for name, M in work.params().items():
        g = np.zeros_like(M)
        flat, gflat = M.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            f_plus = objective(work)
            flat[i] = orig - eps
            f_minus = objective(work)
            flat[i] = orig
            gflat[i] = (f_plus - f_minus) / (2.0 * eps)
        grads[name] = g
    return state.replace(**grads)
