"""Full-batch gradient descent for the UFM variants with periodic collapse metrics."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .core import ProblemDims
from .metrics import NCReport, nc_report
from .models import Hyperparams, ModelState, PlainState, TwoLayerState, Variant, evaluate

log = logging.getLogger(__name__)

DIVERGENCE_THRESHOLD = 1e6


class DivergenceError(RuntimeError):
    def __init__(self, message: str, iteration: int, objective: float):
        super().__init__(message)
        self.iteration = iteration
        self.objective = objective


@dataclass(frozen=True)
class InitSpec:
    """Standard normal initialization times ``scale``.

    ``scales`` optionally overrides the multiplier per parameter name, e.g.
    ``{"H1": 0.2}``.
    """

    scale: float = 1.0
    seed: int = 0
    distribution: str = "standard_normal"
    scales: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.distribution != "standard_normal":
            raise ValueError(f"unsupported distribution {self.distribution!r}")
        for value in (self.scale, *self.scales.values()):
            if not value > 0:
                raise ValueError(f"init scale must be positive, got {value!r}")

    def scale_for(self, name: str) -> float:
        return float(self.scales.get(name, self.scale))


@dataclass(frozen=True)
class OptimConfig:
    step_size: float = 0.1
    max_iters: int = 200_000
    log_every: int = 5_000
    grad_tol: float = 1e-10
    init: InitSpec = field(default_factory=InitSpec)

    def __post_init__(self) -> None:
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if self.max_iters < 1 or self.log_every < 1:
            raise ValueError("max_iters and log_every must be positive")
        if self.log_every > self.max_iters:
            raise ValueError("log_every cannot exceed max_iters")
        if not self.grad_tol >= 0:
            raise ValueError("grad_tol must be nonnegative")


@dataclass
class TraceRow:
    iteration: int
    objective: float
    grad_norm: float
    report: NCReport


@dataclass
class Trace:
    rows: list[TraceRow] = field(default_factory=list)
    converged: bool = False

    def append(self, row: TraceRow) -> None:
        if self.rows and row.iteration <= self.rows[-1].iteration:
            raise ValueError("trace iterations must be strictly increasing")
        self.rows.append(row)

    @property
    def final(self) -> TraceRow:
        return self.rows[-1]


def init_state(variant: Variant | str, dims: ProblemDims, init: InitSpec) -> ModelState:
    """Draw parameters from one seeded stream: W, H, b (plain) or W2, W1, H1 (two-layer)."""
    variant = Variant(variant)
    rng = np.random.default_rng(init.seed)
    K, d, N = dims.K, dims.d, dims.N

    def draw(name: str, shape: tuple[int, ...]) -> np.ndarray:
        return init.scale_for(name) * rng.standard_normal(shape)

    if variant.is_plain:
        W = draw("W", (K, d))
        H = draw("H", (d, N))
        b = draw("b", (K,)) if variant is not Variant.PLAIN_BIAS_FREE else None
        return PlainState(W, H, b)
    W2 = draw("W2", (K, d))
    W1 = draw("W1", (d, d))
    H1 = draw("H1", (d, N))
    return TwoLayerState(W2, W1, H1)


def gradient_descent(state: ModelState, Y: np.ndarray, dims: ProblemDims, hyper: Hyperparams,
                     variant: Variant | str, cfg: OptimConfig,
                     center: bool = False) -> tuple[ModelState, Trace]:
    """Plain gradient descent ``x <- x - step * grad``.

    Logs objective, gradient norm and an :class:`NCReport` every ``cfg.log_every``
    iterations and at the final iterate. Raises :class:`DivergenceError` when the
    objective exceeds 1e6 or stops being finite.
    """
    variant = Variant(variant)
    activation = variant.activation
    trace = Trace()

    def record(it: int, x: ModelState, obj: float, gnorm: float) -> None:
        if trace.rows and obj > trace.rows[-1].objective:
            log.warning("objective increased between logged rows at iteration %d (%.6g -> %.6g)",
                        it, trace.rows[-1].objective, obj)
        trace.append(TraceRow(it, obj, gnorm, nc_report(x, dims, activation, center)))

    x = state.copy()
    res = evaluate(variant, x, Y, dims, hyper)
    it = 0
    while True:
        obj = res.objective
        if not math.isfinite(obj) or obj > DIVERGENCE_THRESHOLD:
            raise DivergenceError(
                f"gradient descent diverged at iteration {it}: objective {obj:.6g} "
                f"(step_size={cfg.step_size})", it, obj)
        gnorm = res.grad.norm()
        done = gnorm <= cfg.grad_tol or it >= cfg.max_iters
        if done or it % cfg.log_every == 0:
            record(it, x, obj, gnorm)
        if done:
            trace.converged = gnorm <= cfg.grad_tol
            break
        for p, g in zip(x, res.grad):
            p -= cfg.step_size * g
        it += 1
        res = evaluate(variant, x, Y, dims, hyper, check=False)
    log.info("gradient descent stopped after %d iterations, objective %.12g, grad norm %.3e",
             it, trace.final.objective, trace.final.grad_norm)
    return x, trace


def best_of_seeds(variant: Variant | str, dims: ProblemDims, Y: np.ndarray, hyper: Hyperparams,
                  cfg: OptimConfig, seeds: list[int],
                  center: bool = False) -> tuple[ModelState, Trace, int, list[float]]:
    """Run from several seeds and keep the run with the lowest final objective.

    Seeds whose run diverges are skipped; if all diverge the last error is re-raised.
    """
    best = None
    finals = []
    error: DivergenceError | None = None
    for seed in seeds:
        run_cfg = OptimConfig(cfg.step_size, cfg.max_iters, cfg.log_every, cfg.grad_tol,
                              InitSpec(cfg.init.scale, seed, cfg.init.distribution, dict(cfg.init.scales)))
        x0 = init_state(variant, dims, run_cfg.init)
        try:
            x, trace = gradient_descent(x0, Y, dims, hyper, variant, run_cfg, center)
        except DivergenceError as exc:
            log.warning("seed %d diverged: %s", seed, exc)
            error = exc
            finals.append(math.inf)
            continue
        finals.append(trace.final.objective)
        if best is None or trace.final.objective < best[1].final.objective:
            best = (x, trace, seed)
    if best is None:
        raise error
    return best[0], best[1], best[2], finals
