"""Closed-form global minimizers of the unconstrained features models.

Every oracle returns an :class:`OracleSolution` whose ``objective_value`` is the
closed-form minimum; evaluating the matching model at ``state`` reproduces it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .core import Frame, NumericalError, ProblemDims, general_simplex_etf
from .models import Hyperparams, PlainState, TwoLayerState


@dataclass(frozen=True)
class CollapseConstant:
    c: float

    @property
    def zero_regime(self) -> bool:
        return self.c > 1.0


@dataclass
class OracleSolution:
    state: PlainState | TwoLayerState
    objective_value: float
    rho: float
    is_zero_solution: bool
    extras: dict = field(default_factory=dict)


def collapse_constant(dims: ProblemDims, lambda_W: float, lambda_H: float) -> CollapseConstant:
    if not (lambda_W > 0 and lambda_H > 0):
        raise ValueError("regularization weights must be positive")
    return CollapseConstant(dims.K * math.sqrt(dims.n * lambda_H * lambda_W))


def lemma1_profile_min(c: float) -> tuple[float, float]:
    """Minimizer and minimum of ``(beta - 1)^2 / 2 + c * beta`` over ``beta >= 0``."""
    if not c > 0:
        raise ValueError("c must be positive")
    if c <= 1.0:
        return 1.0 - c, c - 0.5 * c * c
    return 0.0, 0.5


def lemma2_profile_min(c: float, K: int) -> tuple[float, float]:
    """Profile minimum for the unregularized-bias model (simplex ETF angles plugged in)."""
    if not c > 0:
        raise ValueError("c must be positive")
    if K < 2:
        raise ValueError("K must be at least 2")
    ratio = (K - 1) / K
    if c <= 1.0:
        return (1.0 - c) * ratio, ratio * (c - 0.5 * c * c)
    return 0.0, ratio / 2.0


def _check_frame(frame: Frame, dims: ProblemDims) -> None:
    if dims.d < dims.K:
        raise ValueError(f"need d >= K, got d={dims.d}, K={dims.K}")
    if frame.shape != (dims.d, dims.K):
        raise ValueError(f"frame has shape {frame.shape}, expected {(dims.d, dims.K)}")


def theorem1_minimizer(dims: ProblemDims, lambda_W: float, lambda_H: float,
                       frame: Frame) -> OracleSolution:
    """Bias-free minimizer: class means form a scaled orthogonal frame, ``W`` aligned with them."""
    _check_frame(frame, dims)
    cc = collapse_constant(dims, lambda_W, lambda_H)
    _, value = lemma1_profile_min(cc.c)
    K, d, n = dims.K, dims.d, dims.n
    if cc.zero_regime:
        state = PlainState(np.zeros((K, d)), np.zeros((d, dims.N)))
        return OracleSolution(state, value, 0.0, True, {"c": cc.c, "Hbar": np.zeros((d, K))})
    rho = (1.0 - cc.c) * math.sqrt(lambda_W / (n * lambda_H))
    Hbar = math.sqrt(rho) * frame.P
    W = math.sqrt(n * lambda_H / lambda_W) * Hbar.T
    H = np.repeat(Hbar, n, axis=1)
    return OracleSolution(PlainState(W, H), value, rho, False, {"c": cc.c, "Hbar": Hbar})


def theorem2_minimizer(dims: ProblemDims, lambda_W: float, lambda_H: float,
                       frame: Frame) -> OracleSolution:
    """Unregularized-bias minimizer: simplex ETF class means and ``b = 1/K``."""
    _check_frame(frame, dims)
    if dims.K < 2:
        raise ValueError("the simplex ETF minimizer needs K >= 2")
    cc = collapse_constant(dims, lambda_W, lambda_H)
    _, value = lemma2_profile_min(cc.c, dims.K)
    K, d, n = dims.K, dims.d, dims.n
    b = np.full(K, 1.0 / K)
    if cc.zero_regime:
        state = PlainState(np.zeros((K, d)), np.zeros((d, dims.N)), b)
        return OracleSolution(state, value, 0.0, True, {"c": cc.c, "Hbar": np.zeros((d, K))})
    rho = (1.0 - cc.c) * (K - 1) / K * math.sqrt(lambda_W / (n * lambda_H))
    # general_simplex_etf columns have squared norm 1
    Hbar = math.sqrt(rho) * general_simplex_etf(K, d, frame)
    W = math.sqrt(n * lambda_H / lambda_W) * Hbar.T
    H = np.repeat(Hbar, n, axis=1)
    return OracleSolution(PlainState(W, H, b), value, rho, False, {"c": cc.c, "Hbar": Hbar})


@dataclass(frozen=True)
class TwoLayerScalars:
    sigma_W: float
    sigma_Hbar: float
    objective: float
    zero_regime: bool
    roots: tuple[float, ...]


def two_layer_profile(sigma_W: float, sigma_Hbar: float, K: int, lambda_W2: float,
                      coupling: float) -> float:
    """Reduced objective over the common singular values of ``W2`` and ``W1 Hbar1``.

    ``coupling`` is ``sqrt(n * lambda_W1 * lambda_H1)``.
    """
    return (0.5 * (sigma_W * sigma_Hbar - 1.0) ** 2 + 0.5 * K * lambda_W2 * sigma_W ** 2
            + K * coupling * sigma_Hbar)


def companion_roots(coeffs: np.ndarray) -> np.ndarray:
    """Roots of ``coeffs[0] x^m + ... + coeffs[m]`` as companion-matrix eigenvalues."""
    coeffs = np.trim_zeros(np.asarray(coeffs, dtype=np.float64), "f")
    m = coeffs.size - 1
    if m < 1:
        return np.zeros(0, dtype=complex)
    C = np.zeros((m, m))
    C[0, :] = -coeffs[1:] / coeffs[0]
    C[1:, :-1] = np.eye(m - 1)
    try:
        return np.linalg.eigvals(C)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"companion eigenvalues failed: {exc}") from exc


def _polish_root(coeffs: np.ndarray, x: float, steps: int = 3) -> float:
    dcoeffs = np.polyder(coeffs)
    for _ in range(steps):
        slope = np.polyval(dcoeffs, x)
        if slope == 0.0:
            break
        x -= np.polyval(coeffs, x) / slope
    return x


def two_layer_singular_values(K: int, n: int, lambda_W2: float, lambda_W1: float,
                              lambda_H1: float) -> TwoLayerScalars:
    """Globally optimal ``(sigma_W, sigma_Hbar)`` for the two-layer models.

    Stationary points satisfy ``lambda_W2 s^4 - a s + K a^2 = 0`` with
    ``a = sqrt(n lambda_W1 lambda_H1)`` and ``sigma_Hbar = lambda_W2 s^2 / a``.
    Every nonnegative real root and the zero point are compared by objective value.
    """
    for value in (lambda_W2, lambda_W1, lambda_H1):
        if not value > 0:
            raise ValueError("regularization weights must be positive")
    a = math.sqrt(n * lambda_W1 * lambda_H1)
    coeffs = np.array([lambda_W2, 0.0, 0.0, -a, K * a * a])
    raw = companion_roots(coeffs)
    scale = max(1.0, float(np.max(np.abs(raw)))) if raw.size else 1.0
    roots = []
    for r in raw:
        if abs(r.imag) <= 1e-8 * scale and r.real >= 0.0:
            roots.append(_polish_root(coeffs, float(r.real)))
    best = (0.0, 0.0, two_layer_profile(0.0, 0.0, K, lambda_W2, a))
    for s in roots:
        sh = lambda_W2 * s * s / a
        value = two_layer_profile(s, sh, K, lambda_W2, a)
        if value < best[2]:
            best = (s, sh, value)
    return TwoLayerScalars(best[0], best[1], best[2], best[0] == 0.0, tuple(sorted(roots)))


def theorem3_minimizer(dims: ProblemDims, hyper: Hyperparams, frame_R: Frame,
                       frame_Rtilde: Frame) -> OracleSolution:
    """Two-layer linear minimizer built from two orthonormal frames.

    ``W2 = sW R^T``, ``W1 = a^(1/4) sqrt(sH) R Rt^T``, ``H1 = a^(-1/4) sqrt(sH) Rt kron 1_n^T``
    with ``a = n lambda_H1 / lambda_W1``.
    """
    if dims.d <= dims.K:
        raise ValueError(f"two-layer oracle needs d > K, got d={dims.d}, K={dims.K}")
    _check_frame(frame_R, dims)
    _check_frame(frame_Rtilde, dims)
    lam_W2, lam_W1, lam_H1 = hyper.require("lambda_W2", "lambda_W1", "lambda_H1")
    K, d, n = dims.K, dims.d, dims.n
    sv = two_layer_singular_values(K, n, lam_W2, lam_W1, lam_H1)
    extras = {"sigma_W": sv.sigma_W, "sigma_Hbar": sv.sigma_Hbar, "quartic_roots": sv.roots}
    if sv.zero_regime:
        state = TwoLayerState(np.zeros((K, d)), np.zeros((d, d)), np.zeros((d, dims.N)))
        extras["Hbar1"] = np.zeros((d, K))
        return OracleSolution(state, sv.objective, 0.0, True, extras)
    ratio = (n * lam_H1 / lam_W1) ** 0.25
    R, Rt = frame_R.P, frame_Rtilde.P
    W2 = sv.sigma_W * R.T
    W1 = ratio * math.sqrt(sv.sigma_Hbar) * (R @ Rt.T)
    Hbar1 = math.sqrt(sv.sigma_Hbar) / ratio * Rt
    H1 = np.repeat(Hbar1, n, axis=1)
    extras["Hbar1"] = Hbar1
    return OracleSolution(TwoLayerState(W2, W1, H1), sv.objective, sv.sigma_Hbar ** 2, False, extras)


def theorem4_minimizer(dims: ProblemDims, hyper: Hyperparams) -> OracleSolution:
    """Two-layer minimizer with axis-aligned frames, so ``W1 H1`` is entrywise nonnegative.

    ReLU acts as the identity on it, so the point is also optimal for the ReLU model
    whenever that model's minimum matches the linear one.
    """
    frame = Frame.axis_aligned(dims.d, dims.K)
    return theorem3_minimizer(dims, hyper, frame, frame)


def ridge_weights(H: np.ndarray, Y: np.ndarray, dims: ProblemDims, lambda_W: float) -> np.ndarray:
    """Minimizer over ``W`` of ``||W H - Y||^2 / (2N) + lambda_W ||W||^2 / 2`` for fixed ``H``."""
    if not lambda_W > 0:
        raise ValueError("lambda_W must be positive")
    if H.shape[1] != Y.shape[1]:
        raise ValueError(f"H has {H.shape[1]} columns but Y has {Y.shape[1]}")
    N = H.shape[1]
    gram = H @ H.T / N
    gram[np.diag_indices_from(gram)] += lambda_W
    rhs = H @ Y.T / N
    try:
        factor = scipy.linalg.cho_factor(gram, lower=True, check_finite=True)
        sol = scipy.linalg.cho_solve(factor, rhs)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"ridge system could not be solved: {exc}") from exc
    return sol.T


def asymptotic_attenuation(sigma_e: float, K: int, lambda_H_tilde: float, lambda_W: float) -> float:
    """Large-sample shrinkage of the ridge weights under i.i.d. feature noise of std ``sigma_e``."""
    if sigma_e < 0:
        raise ValueError("sigma_e must be nonnegative")
    if not (lambda_H_tilde > 0 and lambda_W > 0):
        raise ValueError("regularization weights must be positive")
    return 1.0 / (1.0 + sigma_e ** 2 * K * math.sqrt(lambda_H_tilde / lambda_W))
