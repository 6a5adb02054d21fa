"""Dimension bookkeeping, label matrices, tight frames and dense linear-algebra helpers.

Matrices are plain ``numpy.ndarray`` objects of dtype float64. Feature matrices
use the class-major column order: column ``k * n + i`` holds sample ``i`` of
class ``k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class NumericalError(RuntimeError):
    """Raised when a dense factorization fails or produces non-finite output."""


@dataclass(frozen=True)
class ProblemDims:
    K: int
    d: int
    n: int
    N: int = field(init=False)

    def __post_init__(self) -> None:
        for name in ("K", "d", "n"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        object.__setattr__(self, "N", int(self.K) * int(self.n))


@dataclass(frozen=True)
class Frame:
    """A d x K matrix with orthonormal columns."""

    P: np.ndarray

    def __post_init__(self) -> None:
        P = np.asarray(self.P, dtype=np.float64)
        if P.ndim != 2 or P.shape[0] < P.shape[1]:
            raise ValueError(f"frame must be d x K with d >= K, got shape {P.shape}")
        err = np.linalg.norm(P.T @ P - np.eye(P.shape[1]))
        if not err <= 1e-12:
            raise ValueError(f"frame columns are not orthonormal (||P^T P - I||_F = {err:.3e})")
        P.setflags(write=False)
        object.__setattr__(self, "P", P)

    @property
    def shape(self) -> tuple[int, int]:
        return self.P.shape

    @classmethod
    def axis_aligned(cls, d: int, K: int) -> "Frame":
        """``[I_K; 0]``, the first K standard basis vectors of R^d."""
        if d < K:
            raise ValueError(f"need d >= K, got d={d}, K={K}")
        return cls(np.eye(d, K))


def check_finite(name: str, M: np.ndarray) -> None:
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains non-finite entries")


def build_label_matrix(dims: ProblemDims) -> np.ndarray:
    """One-hot targets ``I_K kron 1_n^T`` (K x N)."""
    return np.kron(np.eye(dims.K), np.ones((1, dims.n)))


def standard_simplex_etf(K: int) -> np.ndarray:
    if K < 2:
        raise ValueError(f"simplex ETF needs K >= 2, got {K}")
    return np.sqrt(K / (K - 1)) * (np.eye(K) - np.ones((K, K)) / K)


def general_simplex_etf(K: int, d: int, frame: Frame) -> np.ndarray:
    """Embed the standard simplex ETF in R^d through an orthonormal frame."""
    if d < K:
        raise ValueError(f"need d >= K, got d={d}, K={K}")
    if frame.shape != (d, K):
        raise ValueError(f"frame has shape {frame.shape}, expected {(d, K)}")
    return frame.P @ standard_simplex_etf(K)


def random_orthonormal(d: int, K: int, seed: int | np.random.Generator) -> Frame:
    """Orthonormalize K i.i.d. standard normal columns of length d.

    The QR signs are fixed so that R has a positive diagonal, which makes the
    result a deterministic function of the Gaussian draw.
    """
    if d < K:
        raise ValueError(f"need d >= K, got d={d}, K={K}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    G = rng.standard_normal((d, K))
    Q, R = np.linalg.qr(G)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Frame(Q * signs)


def _svd(M: np.ndarray, compute_uv: bool = True):
    M = np.asarray(M, dtype=np.float64)
    check_finite("matrix", M)
    try:
        return np.linalg.svd(M, full_matrices=False, compute_uv=compute_uv)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc


def pseudoinverse(M: np.ndarray, rtol: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudoinverse with a relative singular-value cutoff.

    Singular values ``s <= rtol * s_max`` are treated as zero. The default
    ``rtol`` is ``1e-10 * max(rows, cols)``.
    """
    M = np.asarray(M, dtype=np.float64)
    if rtol is None:
        rtol = 1e-10 * max(M.shape)
    U, s, Vt = _svd(M)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(M.T.shape)
    keep = s > rtol * s[0]
    s_inv = np.zeros_like(s)
    s_inv[keep] = 1.0 / s[keep]
    return (Vt.T * s_inv) @ U.T


def nuclear_norm(M: np.ndarray) -> float:
    return float(np.sum(_svd(M, compute_uv=False)))
