"""Experiment configuration: a strict, versioned JSON schema.

Unknown keys are rejected everywhere (a typo between the two noise fields
is the most dangerous failure mode) and cross-field consistency is checked
at validation time. The same pydantic models validate config files on the
CLI side and request bodies on the service side.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigError
from .jsonio import digest
from .models import ArrivalModel, BaseloadModel, CausalFilter, HorizonConfig
from .montecarlo import RunConfig
from .qp import SolverOptions
from .traces import ingest_trace

__all__ = ["ExperimentConfig", "HorizonSection", "BaseloadSection",
           "ArrivalSection", "QpSection", "load_config", "validate_config",
           "build_run_config", "config_digest"]

SCHEMA_VERSION = 1


class HorizonSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    slots: int = Field(ge=2, description="number of control slots")
    slot_minutes: float = Field(default=60.0, gt=0)


class BaseloadSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mean: Optional[list[float]] = None
    constant: Optional[float] = None
    trace: Optional[str] = None
    filter: list[float] = Field(default_factory=lambda: [1.0], min_length=1)
    noise_std: float = Field(default=0.0, ge=0)
    noise_bound: float = Field(default=0.0, ge=0)

    @model_validator(mode="after")
    def _check(self) -> "BaseloadSection":
        sources = [s is not None for s in (self.mean, self.constant, self.trace)]
        if sum(sources) != 1:
            raise ValueError("exactly one of baseload.mean, baseload.constant, "
                             "baseload.trace must be given")
        if self.noise_std > self.noise_bound:
            raise ValueError("baseload.noise_std cannot exceed noise_bound")
        return self


class ArrivalSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mean: float = Field(ge=0)
    std: float = Field(default=0.0, ge=0)
    bound: float = Field(default=0.0, ge=0)
    allow_negative: bool = False

    @model_validator(mode="after")
    def _check(self) -> "ArrivalSection":
        if self.std > self.bound:
            raise ValueError("arrivals.std cannot exceed arrivals.bound")
        if self.bound > self.mean and not self.allow_negative:
            raise ValueError("arrivals.bound exceeds arrivals.mean; set "
                             "allow_negative to permit negative energy")
        return self


class QpSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    max_power: Optional[float] = Field(default=None, gt=0)
    kkt_tol: float = Field(default=1e-8, gt=0)
    max_iters: int = Field(default=50_000, ge=1)


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    version: int
    horizon: HorizonSection
    baseload: BaseloadSection
    arrivals: ArrivalSection
    engine: Literal["valley", "qp"] = "valley"
    runs: int = Field(default=100, ge=1)
    seed: int = Field(default=0, ge=0)
    penetration: Optional[float] = Field(default=None, ge=0, le=1)
    qp: QpSection = Field(default_factory=QpSection)
    output_dir: Optional[str] = None

    @model_validator(mode="after")
    def _check(self) -> "ExperimentConfig":
        if self.version != SCHEMA_VERSION:
            raise ValueError(f"unsupported config version {self.version}; "
                             f"expected {SCHEMA_VERSION}")
        if self.baseload.mean is not None \
                and len(self.baseload.mean) != self.horizon.slots:
            raise ValueError("baseload.mean length must equal horizon.slots")
        if len(self.baseload.filter) > self.horizon.slots:
            raise ValueError("baseload.filter is longer than the horizon")
        if self.penetration is not None and self.baseload.trace is None:
            raise ValueError("penetration only applies to trace baseloads")
        return self

    @property
    def resolved(self) -> bool:
        return self.baseload.trace is None

    def resolve(self, base_dir=None) -> "ExperimentConfig":
        """Replace a trace reference by the ingested mean profile."""
        if self.resolved:
            return self
        path = Path(self.baseload.trace)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        profile = ingest_trace(path, self.horizon.slots, self.penetration)
        update = self.model_dump()
        update["baseload"]["trace"] = None
        update["baseload"]["mean"] = [float(v) for v in profile]
        update["penetration"] = None
        return ExperimentConfig.model_validate(update)


def validate_config(payload: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(payload)
    except ValidationError as err:
        raise ConfigError(str(err)) from err


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"config {path} is not valid JSON: {err}") from err
    return validate_config(payload)


def config_digest(config: ExperimentConfig) -> str:
    """Digest of the resolved numeric content (trace data folded in)."""
    if not config.resolved:
        raise ConfigError("digest is defined on resolved configs only")
    return digest(config.model_dump())


def _mean_profile(config: ExperimentConfig) -> list[float]:
    if config.baseload.mean is not None:
        return list(config.baseload.mean)
    return [float(config.baseload.constant)] * config.horizon.slots


def build_run_config(config: ExperimentConfig,
                     engine: str | None = None) -> RunConfig:
    """Turn a resolved config into the core model objects."""
    if not config.resolved:
        raise ConfigError("resolve the trace reference before building models "
                          "(CLI: automatic; service: ingest client-side)")
    HorizonConfig(config.horizon.slots, config.horizon.slot_minutes)
    baseload = BaseloadModel(
        mean_profile=_mean_profile(config),
        filter=CausalFilter(tuple(config.baseload.filter)),
        std=config.baseload.noise_std,
        bound=config.baseload.noise_bound,
    )
    arrivals = ArrivalModel(
        mean_energy=config.arrivals.mean,
        std=config.arrivals.std,
        bound=config.arrivals.bound,
        allow_negative=config.arrivals.allow_negative,
    )
    options = SolverOptions(kkt_tol=config.qp.kkt_tol,
                            max_iters=config.qp.max_iters)
    return RunConfig(baseload=baseload, arrivals=arrivals,
                     engine=engine or config.engine,
                     qp_max_power=config.qp.max_power, qp_options=options)
