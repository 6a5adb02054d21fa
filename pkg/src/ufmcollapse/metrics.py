"""Neural-collapse measurements: NC1 (within-class variability), NC2 (frame geometry), NC3 (alignment)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ProblemDims, pseudoinverse
from .models import PlainState, TwoLayerState, Variant, relu

_TINY = 1e-300


@dataclass
class ScatterPair:
    sigma_W: np.ndarray
    sigma_B: np.ndarray


@dataclass
class LevelMetrics:
    nc1: float
    nc2_etf: float
    nc2_of: float


@dataclass
class NCReport:
    """Metrics per feature level (ordered) plus the top-level weight alignment."""

    levels: dict[str, LevelMetrics]
    nc3: float | None
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "levels": {name: vars(m).copy() for name, m in self.levels.items()},
            "nc3": self.nc3,
            "flags": list(self.flags),
        }


def _check_features(H: np.ndarray, dims: ProblemDims) -> None:
    if H.ndim != 2 or H.shape[1] != dims.N:
        raise ValueError(f"features have shape {H.shape}, expected (*, {dims.N})")


def class_means(H: np.ndarray, dims: ProblemDims) -> tuple[np.ndarray, np.ndarray]:
    _check_features(H, dims)
    Hbar = H.reshape(H.shape[0], dims.K, dims.n).mean(axis=2)
    return Hbar, Hbar.mean(axis=1)


def scatter_matrices(H: np.ndarray, dims: ProblemDims) -> ScatterPair:
    Hbar, h_G = class_means(H, dims)
    # shift by each class's first sample so identical columns give exactly zero scatter
    blocks = H.reshape(H.shape[0], dims.K, dims.n)
    shifted = blocks - blocks[:, :, :1]
    within = (shifted - shifted.mean(axis=2, keepdims=True)).reshape(H.shape)
    between = Hbar - h_G[:, None]
    return ScatterPair(within @ within.T / dims.N, between @ between.T / dims.K)


def nc1(H: np.ndarray, dims: ProblemDims, flags: list[str] | None = None,
        rtol: float | None = None) -> float:
    """``tr(Sigma_W pinv(Sigma_B)) / K``; zero between-class scatter gives 0 and a flag."""
    sp = scatter_matrices(H, dims)
    if not np.any(sp.sigma_B):
        if flags is not None:
            flags.append("nc1: between-class scatter is zero")
        return 0.0
    value = np.trace(sp.sigma_W @ pseudoinverse(sp.sigma_B, rtol)) / dims.K
    return max(float(value), 0.0)


def _normalized_gram(Hbar: np.ndarray) -> np.ndarray | None:
    G = Hbar.T @ Hbar
    norm = np.linalg.norm(G)
    if norm <= _TINY:
        return None
    return G / norm


def nc2_of(Hbar: np.ndarray, flags: list[str] | None = None) -> float:
    K = Hbar.shape[1]
    G = _normalized_gram(Hbar)
    if G is None:
        if flags is not None:
            flags.append("nc2_of: mean features are zero")
        return 1.0
    return float(np.linalg.norm(G - np.eye(K) / np.sqrt(K)))


def nc2_etf(Hbar: np.ndarray, center: bool = False, flags: list[str] | None = None) -> float:
    K = Hbar.shape[1]
    if center:
        Hbar = Hbar - Hbar.mean(axis=1, keepdims=True)
    G = _normalized_gram(Hbar)
    if G is None:
        if flags is not None:
            flags.append("nc2_etf: (centered) mean features are zero")
        return 1.0
    target = (np.eye(K) - np.ones((K, K)) / K) / np.sqrt(K - 1)
    return float(np.linalg.norm(G - target))


def nc3(W: np.ndarray, Hbar: np.ndarray, flags: list[str] | None = None) -> float:
    nw, nh = np.linalg.norm(W), np.linalg.norm(Hbar)
    if nw <= _TINY or nh <= _TINY:
        if flags is not None:
            flags.append("nc3: weights or mean features are zero")
        return 1.0
    return float(np.linalg.norm(W / nw - Hbar.T / nh))


def feature_levels(state: PlainState | TwoLayerState, activation: str | None = None) -> dict[str, np.ndarray]:
    """Feature matrices measured for a model state, shallow to deep; the last one feeds the classifier."""
    if isinstance(state, PlainState):
        return {"h": state.H}
    Z = state.W1 @ state.H1
    if activation == "relu":
        return {"h1": state.H1, "pre": Z, "post": relu(Z)}
    return {"h1": state.H1, "h2": Z}


def level_names(variant: Variant | str) -> tuple[str, ...]:
    variant = Variant(variant)
    if variant.is_plain:
        return ("h",)
    if variant.activation == "relu":
        return ("h1", "pre", "post")
    return ("h1", "h2")


def features_report(levels: dict[str, np.ndarray], W: np.ndarray | None, dims: ProblemDims,
                    center: bool = False) -> NCReport:
    flags: list[str] = []
    out = {}
    top_mean = None
    for name, H in levels.items():
        lf: list[str] = []
        Hbar, _ = class_means(H, dims)
        out[name] = LevelMetrics(nc1(H, dims, lf), nc2_etf(Hbar, center, lf), nc2_of(Hbar, lf))
        flags.extend(f"{name}/{msg}" for msg in lf)
        top_mean = Hbar
    value = None
    if W is not None and top_mean is not None:
        lf = []
        value = nc3(W, top_mean, lf)
        flags.extend(lf)
    return NCReport(out, value, flags)


def nc_report(state: PlainState | TwoLayerState, dims: ProblemDims, activation: str | None = None,
              center: bool = False) -> NCReport:
    """Collapse metrics at every feature level of a model state, NC3 against the top classifier."""
    W = state.W if isinstance(state, PlainState) else state.W2
    return features_report(feature_levels(state, activation), W, dims, center)
