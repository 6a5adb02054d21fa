"""Experiment pipelines behind the CLI: training runs, oracle reports, verification, ridge asymptotics."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .analytic import (OracleSolution, asymptotic_attenuation, ridge_weights, theorem1_minimizer,
                       theorem2_minimizer, theorem3_minimizer, theorem4_minimizer)
from .config import AsymptoticConfig, ExperimentConfig
from .core import ProblemDims, build_label_matrix, nuclear_norm, random_orthonormal
from .metrics import NCReport, class_means, nc_report
from .models import ModelState, PlainState, Variant, evaluate, relu
from .optim import Trace, best_of_seeds

log = logging.getLogger(__name__)

OBJECTIVE_RTOL = 1e-3
ZERO_NORM_TOL = 1e-6


class NoOracleError(ValueError):
    pass


def oracle_solution(cfg: ExperimentConfig, seed: int | None = None) -> OracleSolution:
    """Closed-form minimizer for the configured variant; frames are drawn from ``seed``."""
    variant, dims, hyper = cfg.variant, cfg.problem_dims(), cfg.hyperparams()
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    if variant is Variant.PLAIN_REG_BIAS:
        raise NoOracleError("plain_reg_bias has no closed-form minimizer")
    if variant is Variant.TWO_LAYER_RELU:
        return theorem4_minimizer(dims, hyper)
    if variant is Variant.TWO_LAYER_LINEAR:
        return theorem3_minimizer(dims, hyper, random_orthonormal(dims.d, dims.K, rng),
                                  random_orthonormal(dims.d, dims.K, rng))
    frame = random_orthonormal(dims.d, dims.K, rng)
    lam_W, lam_H = hyper.require("lambda_W", "lambda_H")
    if variant is Variant.PLAIN_BIAS_FREE:
        return theorem1_minimizer(dims, lam_W, lam_H, frame)
    return theorem2_minimizer(dims, lam_W, lam_H, frame)


def stationarity_residual(cfg: ExperimentConfig, state: ModelState) -> float:
    dims = cfg.problem_dims()
    res = evaluate(cfg.variant, state, build_label_matrix(dims), dims, cfg.hyperparams())
    return res.grad.norm()


def oracle_report(cfg: ExperimentConfig) -> dict:
    sol = oracle_solution(cfg)
    dims = cfg.problem_dims()
    out = {
        "variant": cfg.variant.value,
        "objective": sol.objective_value,
        "rho": sol.rho,
        "zero_regime": sol.is_zero_solution,
    }
    if cfg.variant.is_plain:
        out["c"] = sol.extras["c"]
    else:
        out["sigma_W"] = sol.extras["sigma_W"]
        out["sigma_Hbar"] = sol.extras["sigma_Hbar"]
        out["quartic_roots"] = list(sol.extras["quartic_roots"])
    out["stationarity_residual"] = stationarity_residual(cfg, sol.state)
    out["nc_report"] = nc_report(sol.state, dims, cfg.variant.activation, cfg.center).to_dict()
    out["config"] = cfg.echo()
    return out


@dataclass
class RunResult:
    state: ModelState
    trace: Trace
    seed: int
    seed_objectives: list[float]
    analytic: OracleSolution | None

    @property
    def final_objective(self) -> float:
        return self.trace.final.objective

    @property
    def final_report(self) -> NCReport:
        return self.trace.final.report


def run_experiment(cfg: ExperimentConfig, seeds: list[int] | None = None) -> RunResult:
    """Gradient descent from every seed in ``seeds`` (default: the config's seed list), best run kept."""
    dims = cfg.problem_dims()
    seeds = cfg.seed_list() if seeds is None else list(seeds)
    state, trace, seed, finals = best_of_seeds(cfg.variant, dims, build_label_matrix(dims),
                                               cfg.hyperparams(), cfg.optim_config(), seeds, cfg.center)
    analytic = None
    if cfg.variant is not Variant.PLAIN_REG_BIAS:
        analytic = oracle_solution(cfg)
    return RunResult(state, trace, seed, finals, analytic)


def run_summary(cfg: ExperimentConfig, result: RunResult) -> dict:
    return {
        "final_objective": result.final_objective,
        "analytic_objective": None if result.analytic is None else result.analytic.objective_value,
        "final_grad_norm": result.trace.final.grad_norm,
        "iterations": result.trace.final.iteration,
        "converged": result.trace.converged,
        "final_report": result.final_report.to_dict(),
        "seed": result.seed,
        "seed_objectives": result.seed_objectives,
        "config": cfg.echo(),
    }


@dataclass
class Check:
    name: str
    value: float
    threshold: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.threshold)

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "threshold": self.threshold,
                "passed": self.passed}


@dataclass
class Verdict:
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, value: float, threshold: float) -> None:
        self.checks.append(Check(name, float(value), threshold))

    def lines(self) -> list[str]:
        return [f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.value:.3e} <= {c.threshold:.0e}"
                for c in self.checks]


def nuclear_gap(state: ModelState) -> float:
    """Relative gap between the nuclear norms of ``W1 H1`` before and after the ReLU."""
    Z = state.W1 @ state.H1
    nz = nuclear_norm(Z)
    if nz == 0.0:
        return 0.0
    return abs(nz - nuclear_norm(relu(Z))) / nz


def verify_result(cfg: ExperimentConfig, result: RunResult) -> Verdict:
    """Compare a finished run with its oracle using the per-variant collapse tolerances."""
    if result.analytic is None:
        raise NoOracleError(f"{cfg.variant.value} has no oracle to verify against")
    dims, variant = cfg.problem_dims(), cfg.variant
    verdict = Verdict()
    target = result.analytic.objective_value
    verdict.add("objective relative gap", abs(result.final_objective - target) / target, OBJECTIVE_RTOL)
    state = result.state
    if result.analytic.is_zero_solution:
        for name, M in state.params().items():
            if name != "b":
                verdict.add(f"norm of {name}", np.linalg.norm(M), ZERO_NORM_TOL)
        if isinstance(state, PlainState) and state.b is not None:
            verdict.add("bias distance to 1/K", np.max(np.abs(state.b - 1.0 / dims.K)), 1e-4)
        return verdict

    rep = result.final_report
    if variant is Variant.PLAIN_BIAS_FREE:
        m = rep.levels["h"]
        verdict.add("NC1", m.nc1, 1e-5)
        verdict.add("NC2 orthogonal frame", m.nc2_of, 1e-4)
        verdict.add("NC3", rep.nc3, 1e-4)
    elif variant is Variant.PLAIN_UNREG_BIAS:
        m = rep.levels["h"]
        _, h_G = class_means(state.H, dims)
        verdict.add("bias distance to 1/K", np.max(np.abs(state.b - 1.0 / dims.K)), 1e-4)
        verdict.add("global mean norm", np.linalg.norm(h_G), 1e-4)
        verdict.add("NC1", m.nc1, 1e-4)
        verdict.add("NC2 simplex ETF", m.nc2_etf, 1e-4)
        verdict.add("NC3", rep.nc3, 1e-4)
    elif variant is Variant.TWO_LAYER_LINEAR:
        for level in ("h1", "h2"):
            verdict.add(f"NC1 {level}", rep.levels[level].nc1, 1e-3)
            verdict.add(f"NC2 orthogonal frame {level}", rep.levels[level].nc2_of, 1e-3)
        verdict.add("NC3", rep.nc3, 1e-3)
    else:
        post = rep.levels["post"]
        verdict.add("NC1 post", post.nc1, 1e-3)
        verdict.add("NC2 orthogonal frame post", post.nc2_of, 1e-3)
        verdict.add("NC3", rep.nc3, 1e-3)
        verdict.add("nuclear norm gap", nuclear_gap(state), 1e-3)
    return verdict


@dataclass
class AsymptoticResult:
    rows: list[tuple[int, int, float]]
    means: dict[int, float]
    kappa: float
    passed: bool


def _noise(rng: np.random.Generator, kind: str, sigma: float, shape: tuple[int, int]) -> np.ndarray:
    if kind == "uniform":
        half = math.sqrt(3.0) * sigma
        return rng.uniform(-half, half, shape)
    return sigma * rng.standard_normal(shape)


def run_asymptotic(cfg: AsymptoticConfig, monotone_slack: float = 1e-9,
                   final_tol: float = 5e-2) -> AsymptoticResult:
    """Ridge weights fitted to noisy collapsed features versus the attenuated optimal classifier."""
    K, d = cfg.dims.K, cfg.dims.d
    kappa = asymptotic_attenuation(cfg.sigma_e, K, cfg.lambda_H_tilde, cfg.lambda_W)
    rows = []
    for trial in range(cfg.trials):
        rng = np.random.default_rng(cfg.seed + trial)
        frame = random_orthonormal(d, K, rng)
        for n in cfg.n_values:
            dims = ProblemDims(K, d, n)
            sol = theorem1_minimizer(dims, cfg.lambda_W, cfg.lambda_H_tilde / n, frame)
            target = kappa * sol.state.W
            H = sol.state.H + _noise(rng, cfg.noise, cfg.sigma_e, (d, dims.N))
            W_hat = ridge_weights(H, build_label_matrix(dims), dims, cfg.lambda_W)
            scale = np.linalg.norm(target)
            err = np.linalg.norm(W_hat - target) / scale if scale > 0 else float(np.linalg.norm(W_hat))
            rows.append((n, trial, float(err)))
    means = {n: float(np.mean([r[2] for r in rows if r[0] == n])) for n in cfg.n_values}
    seq = [means[n] for n in cfg.n_values]
    monotone = all(b <= a + monotone_slack for a, b in zip(seq, seq[1:]))
    passed = monotone and seq[-1] <= final_tol
    log.info("asymptotic means %s (kappa %.6g)", means, kappa)
    return AsymptoticResult(rows, means, kappa, passed)

