"""Request and response models for the HTTP API."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from ..config import ExperimentConfig

__all__ = ["ServiceInfo", "BoundsRequest", "SimulateRequest", "McRequest",
           "WorstCaseRequest", "IngestRequest", "ReportResponse",
           "McResponse", "IngestResponse", "ErrorPayload"]


class ServiceInfo(BaseModel):
    name: str
    version: str
    endpoints: list[str]


class BoundsRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: ExperimentConfig


class SimulateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: ExperimentConfig
    seed: Optional[int] = Field(default=None, ge=0)
    engine: Optional[Literal["valley", "qp"]] = None
    include_trajectory: bool = False


class McRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: ExperimentConfig
    runs: Optional[int] = Field(default=None, ge=1)
    seed: Optional[int] = Field(default=None, ge=0)
    engine: Optional[Literal["valley", "qp"]] = None


class WorstCaseRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: ExperimentConfig
    include_trajectory: bool = False


class IngestRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    trace_csv: str
    slots: int = Field(ge=1)
    penetration: Optional[float] = Field(default=None, ge=0, le=1)


class ReportResponse(BaseModel):
    report: dict


class McResponse(BaseModel):
    report: dict
    cdf: list[tuple[float, float]]


class IngestResponse(BaseModel):
    profile: list[float]
    rows: int
    block: int
    mean_baseload: float
    mean_renewable: float
    scale_factor: Optional[float]


class ErrorPayload(BaseModel):
    category: str
    message: str
