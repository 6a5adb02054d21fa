"""JSON experiment configurations, validated with pydantic and converted to library types."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, ValidationError, model_validator

from .core import ProblemDims
from .models import BiasMode, Hyperparams, Variant
from .optim import InitSpec, OptimConfig

__all__ = [
    "AsymptoticConfig",
    "ConfigError",
    "ExperimentConfig",
    "load_asymptotic_config",
    "load_experiment_config",
]

_PLAIN_KEYS = {"lambda_W", "lambda_H"}
_TWO_LAYER_KEYS = {"lambda_W2", "lambda_W1", "lambda_H1"}


class ConfigError(ValueError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DimsModel(_Strict):
    K: PositiveInt
    d: PositiveInt
    n: PositiveInt


class BaseDimsModel(_Strict):
    K: PositiveInt
    d: PositiveInt


class HyperModel(_Strict):
    lambda_W: Optional[PositiveFloat] = None
    lambda_H: Optional[PositiveFloat] = None
    lambda_b: Optional[PositiveFloat] = None
    lambda_W2: Optional[PositiveFloat] = None
    lambda_W1: Optional[PositiveFloat] = None
    lambda_H1: Optional[PositiveFloat] = None


class InitModel(_Strict):
    distribution: Literal["standard_normal"] = "standard_normal"
    scale: PositiveFloat = 1.0
    scales: dict[str, PositiveFloat] = Field(default_factory=dict)


class OptimModel(_Strict):
    step_size: PositiveFloat = 0.1
    max_iters: PositiveInt = 200_000
    log_every: PositiveInt = 5_000
    grad_tol: float = Field(default=1e-10, ge=0)
    init: InitModel = Field(default_factory=InitModel)

    @model_validator(mode="after")
    def _log_every_fits(self):
        if self.log_every > self.max_iters:
            raise ValueError("log_every cannot exceed max_iters")
        return self


class ExperimentConfig(_Strict):
    variant: Variant
    dims: DimsModel
    hyper: HyperModel
    optim: OptimModel = Field(default_factory=OptimModel)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    retry_seeds: Optional[PositiveInt] = None
    center: bool = False
    output_path: Optional[str] = None

    @model_validator(mode="after")
    def _hyper_matches_variant(self):
        given = {k for k, v in self.hyper.model_dump().items() if v is not None}
        if self.variant.is_plain:
            required = set(_PLAIN_KEYS)
            if self.variant is Variant.PLAIN_REG_BIAS:
                required.add("lambda_b")
        else:
            required = set(_TWO_LAYER_KEYS)
        missing, extra = required - given, given - required
        if missing:
            raise ValueError(f"variant {self.variant.value} needs {sorted(missing)}")
        if extra:
            raise ValueError(f"variant {self.variant.value} does not use {sorted(extra)}")
        names = {"W", "H", "b"} if self.variant.is_plain else {"W2", "W1", "H1"}
        unknown = set(self.optim.init.scales) - names
        if unknown:
            raise ValueError(f"init.scales has unknown parameters {sorted(unknown)}")
        return self

    def problem_dims(self) -> ProblemDims:
        return ProblemDims(self.dims.K, self.dims.d, self.dims.n)

    def hyperparams(self) -> Hyperparams:
        return Hyperparams(**self.hyper.model_dump(exclude_none=True), bias_mode=self.variant.bias_mode)

    def optim_config(self, seed: int | None = None) -> OptimConfig:
        o = self.optim
        init = InitSpec(o.init.scale, self.seed if seed is None else seed, o.init.distribution,
                        dict(o.init.scales))
        return OptimConfig(o.step_size, o.max_iters, o.log_every, o.grad_tol, init)

    def seed_list(self) -> list[int]:
        count = self.retry_seeds or (1 if self.variant.is_plain else 3)
        return [self.seed + i for i in range(count)]

    def echo(self) -> dict:
        return self.model_dump(mode="json")


class AsymptoticConfig(_Strict):
    dims: BaseDimsModel = Field(default_factory=lambda: BaseDimsModel(K=4, d=20))
    lambda_W: PositiveFloat = 0.005
    lambda_H_tilde: PositiveFloat = 0.005
    sigma_e: float = Field(default=0.5, ge=0)
    noise: Literal["gaussian", "uniform"] = "gaussian"
    n_values: list[PositiveInt] = Field(default_factory=lambda: [100, 1000, 10000], min_length=1)
    trials: PositiveInt = 5
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    output_path: Optional[str] = None

    @model_validator(mode="after")
    def _increasing(self):
        if any(b <= a for a, b in zip(self.n_values, self.n_values[1:])):
            raise ValueError("n_values must be strictly increasing")
        if self.dims.d < self.dims.K:
            raise ValueError("need d >= K")
        return self

    def echo(self) -> dict:
        return self.model_dump(mode="json")


def _load(path: str | Path, model: type[BaseModel], overrides: dict | None):
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return model.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"invalid config {path}:\n{exc}") from exc


def load_experiment_config(path: str | Path, **overrides) -> ExperimentConfig:
    return _load(path, ExperimentConfig, overrides)


def load_asymptotic_config(path: str | Path, **overrides) -> AsymptoticConfig:
    return _load(path, AsymptoticConfig, overrides)


def experiment_from_dict(data: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


BIAS_MODES = tuple(m.value for m in BiasMode)
