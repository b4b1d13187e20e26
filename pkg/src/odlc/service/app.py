"""HTTP service wrapping the simulation and analysis core.

Stateless compute endpoints mirroring the CLI subcommands. Configs arrive
fully resolved (inline mean profiles); trace CSVs are ingested through the
dedicated endpoint so the service never touches client file systems.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__, experiment
from ..errors import ConfigError, OdlcError
from ..traces import parse_trace, resample_profile, scale_renewable
from .schemas import (BoundsRequest, IngestRequest, IngestResponse, McRequest,
                      McResponse, ReportResponse, ServiceInfo, SimulateRequest,
                      WorstCaseRequest)

__all__ = ["create_app", "app"]

_ENDPOINTS = ["/bounds", "/simulate", "/mc", "/worst-case", "/ingest"]


def _resolved(config):
    if not config.resolved:
        raise ConfigError(
            "config references a trace file; ingest it client-side (the CLI "
            "does this automatically) and inline the profile")
    return config


def create_app() -> FastAPI:
    app = FastAPI(title="odlc", version=__version__,
                  description="Deferrable load control: simulation engines, "
                              "closed-form bounds, Monte Carlo validation.")

    @app.exception_handler(OdlcError)
    async def _odlc_error(request: Request, err: OdlcError) -> JSONResponse:
        return JSONResponse(status_code=400,
                            content={"category": err.category,
                                     "message": str(err)})

    @app.get("/", response_model=ServiceInfo)
    def info() -> ServiceInfo:
        return ServiceInfo(name="odlc", version=__version__,
                           endpoints=_ENDPOINTS)

    @app.post("/bounds", response_model=ReportResponse)
    def bounds(request: BoundsRequest) -> ReportResponse:
        report = experiment.run_bounds(_resolved(request.config))
        return ReportResponse(report=report)

    @app.post("/simulate", response_model=ReportResponse)
    def simulate(request: SimulateRequest) -> ReportResponse:
        report = experiment.run_simulate(
            _resolved(request.config), seed=request.seed,
            engine=request.engine,
            include_trajectory=request.include_trajectory)
        return ReportResponse(report=report)

    @app.post("/mc", response_model=McResponse)
    def mc(request: McRequest) -> McResponse:
        report, rows = experiment.run_mc(
            _resolved(request.config), runs=request.runs, seed=request.seed,
            engine=request.engine)
        return McResponse(report=report, cdf=rows)

    @app.post("/worst-case", response_model=ReportResponse)
    def worst_case(request: WorstCaseRequest) -> ReportResponse:
        report = experiment.run_worst_case(
            _resolved(request.config),
            include_trajectory=request.include_trajectory)
        return ReportResponse(report=report)

    @app.post("/ingest", response_model=IngestResponse)
    def ingest(request: IngestRequest) -> IngestResponse:
        trace = parse_trace(request.trace_csv)
        factor = None
        scaled = trace
        if request.penetration is not None:
            scaled = scale_renewable(trace, request.penetration)
            before = float(trace.renewable_kw.mean())
            factor = (float(scaled.renewable_kw.mean()) / before
                      if before > 0 else 0.0)
        profile = resample_profile(scaled, request.slots)
        return IngestResponse(
            profile=[float(v) for v in profile],
            rows=trace.rows,
            block=trace.rows // request.slots,
            mean_baseload=float(trace.baseload_kw.mean()),
            mean_renewable=float(scaled.renewable_kw.mean()),
            scale_factor=factor,
        )

    return app


app = create_app()
