"""Experiment configuration: YAML file -> validated, fully resolved model."""

from __future__ import annotations

import math
import os
from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

OUTPUT_ENV = "SVQSIM_OUTPUT_DIR"


class ConfigError(ValueError):
    """Raised for any malformed experiment config; message carries field paths."""


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class HamiltonianConfig(_Model):
    # rabi
    omega: float = 0.612
    field: float = 5.0
    # h2
    distance: float | None = None
    table: str | None = None
    # custom
    terms: dict[str, float] | None = None
    ancillas: int = Field(0, ge=0)


class AnsatzConfig(_Model):
    depth: int = Field(1, ge=1)


class SsvqeConfig(_Model):
    levels: int = Field(2, ge=1)
    weights: list[float] | None = None
    optimizer: Literal["sequential", "bfgs"] = "sequential"
    restarts: int = Field(8, ge=1)
    max_iterations: int = Field(500, ge=1)
    tolerance: float = Field(1e-12, gt=0)
    energy_tolerance: float = Field(1e-3, gt=0)

    @field_validator("weights")
    @classmethod
    def _decreasing(cls, w):
        if w is not None and any(a <= b for a, b in zip(w, w[1:])):
            raise ValueError("weights must be strictly decreasing")
        return w


class TargetConfig(_Model):
    observable: dict[str, float]
    target: float


class PrepConfig(_Model):
    objective: Literal["h2_occupancy", "custom"] = "h2_occupancy"
    targets: list[TargetConfig] = []
    restarts: int = Field(16, ge=1)
    max_iterations: int = Field(400, ge=1)

    @model_validator(mode="after")
    def _targets_present(self):
        if self.objective == "custom" and not self.targets:
            raise ValueError("a custom objective needs at least one target")
        return self


class TimeGridConfig(_Model):
    start: float = 0.0
    stop: float | None = None
    points: int = Field(64, ge=1)

    @field_validator("start")
    @classmethod
    def _finite_start(cls, v):
        if not math.isfinite(v):
            raise ValueError("must be finite")
        return v

    @field_validator("stop")
    @classmethod
    def _increasing(cls, v, info):
        if v is None:
            return v
        if not math.isfinite(v):
            raise ValueError("must be finite")
        start = info.data.get("start")
        if start is not None and v <= start:
            raise ValueError(f"must be greater than start={start} (grid must be strictly increasing)")
        return v

    def values(self) -> list[float]:
        if self.points == 1:
            return [self.start]
        step = (self.stop - self.start) / (self.points - 1)
        return [self.start + k * step for k in range(self.points)]


class NoiseConfig(_Model):
    p1: float = Field(0.0, ge=0, le=1)
    p2: float = Field(0.0, ge=0, le=1)
    rz_noiseless: bool = True


class MitigationConfig(_Model):
    factors: list[int] = [1]
    mode: Literal["identity", "sandwich"] = "identity"

    @field_validator("factors")
    @classmethod
    def _odd(cls, factors):
        if not factors:
            raise ValueError("at least one factor is required")
        for e in factors:
            if e < 1 or e % 2 == 0:
                raise ValueError(f"factor {e} is not an odd positive integer")
        if len(set(factors)) != len(factors):
            raise ValueError("factors must be distinct")
        return sorted(factors)


class SpectrumConfig(_Model):
    start: float = 0.2
    stop: float = 1.5


class ExperimentConfig(_Model):
    kind: Literal["rabi", "h2", "custom"]
    seed: int
    output_dir: str = "results"
    hamiltonian: HamiltonianConfig = HamiltonianConfig()
    ansatz: AnsatzConfig = AnsatzConfig()
    ssvqe: SsvqeConfig = SsvqeConfig()
    prep: PrepConfig | None = None
    time_grid: TimeGridConfig = TimeGridConfig()
    initial_states: list[int | str] | None = None
    observables: list[str] | None = None
    shots: int | None = Field(None, ge=1)
    noise: NoiseConfig = NoiseConfig()
    mitigation: MitigationConfig = MitigationConfig()
    spectrum: SpectrumConfig = SpectrumConfig()

    @model_validator(mode="after")
    def _kind_requirements(self):
        h = self.hamiltonian
        if self.kind == "h2" and h.distance is None:
            raise ValueError("hamiltonian.distance is required for kind 'h2'")
        if self.kind == "custom" and not h.terms:
            raise ValueError("hamiltonian.terms is required for kind 'custom'")
        if self.kind != "rabi" and self.time_grid.stop is None and self.time_grid.points > 1:
            raise ValueError("time_grid.stop is required")
        return self


def _format_error(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        path = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{path}: {err['msg']}")
    return "; ".join(lines)


def parse_config(data: dict[str, Any]) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("<root>: config must be a mapping")
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_error(exc)) from None


def load_config(path: str | Path, overrides: dict[str, Any] | None = None) -> ExperimentConfig:
    """Read YAML, apply dotted-path ``overrides`` (e.g. {"noise.p2": 0.01}), validate."""
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such file") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML ({exc})") from None
    data = data or {}
    for dotted, value in (overrides or {}).items():
        node = data
        *parents, leaf = dotted.split(".")
        for key in parents:
            node = node.setdefault(key, {})
        node[leaf] = value
    return parse_config(data)


def resolve_output_dir(config: ExperimentConfig, cli_value: str | None = None) -> Path:
    """Precedence: --out, then $SVQSIM_OUTPUT_DIR, then the config file."""
    return Path(cli_value or os.environ.get(OUTPUT_ENV) or config.output_dir)


RABI_INITIAL_STATES = list(range(-4, 5))


def resolve(config: ExperimentConfig) -> ExperimentConfig:
    """Fill the defaults that depend on other fields (grid end, weights, inputs)."""
    updates: dict[str, Any] = {}
    if config.time_grid.stop is None and config.time_grid.points > 1:
        updates["time_grid"] = config.time_grid.model_copy(
            update={"stop": 2 * math.pi / config.hamiltonian.omega})
    if config.ssvqe.weights is None:
        levels = config.ssvqe.levels
        updates["ssvqe"] = config.ssvqe.model_copy(update={"weights": [float(levels - j) for j in range(levels)]})
    if config.initial_states is None:
        updates["initial_states"] = RABI_INITIAL_STATES if config.kind == "rabi" else ["prep"]
    if config.kind == "h2" and config.prep is None:
        updates["prep"] = PrepConfig()
    return config.model_copy(update=updates)


def _dump(value: Any) -> Any:
    return value.model_dump(mode="json") if isinstance(value, BaseModel) else value


def defaulted_fields(model: BaseModel, resolved: BaseModel | None = None, prefix: str = "") -> dict[str, Any]:
    """Dotted path -> resolved value for every field the config did not set.

    ``model`` is the config as parsed (its set-field bookkeeping decides what
    counts as defaulted), ``resolved`` the same config after :func:`resolve`.
    """
    resolved = model if resolved is None else resolved
    out: dict[str, Any] = {}
    for name in type(model).model_fields:
        value = getattr(model, name)
        final = getattr(resolved, name)
        path = f"{prefix}{name}"
        if name not in model.model_fields_set:
            out[path] = _dump(final)
        elif isinstance(value, BaseModel):
            out.update(defaulted_fields(value, final, path + "."))
        elif value != final:
            out[path] = _dump(final)
    return out
