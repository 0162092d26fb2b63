"""HTTP service exposing the bounds and experiments.

Run with ``uvicorn chronon.api:app``.  The CLI calls the same service
functions in-process, so no server is needed for batch runs.
"""

from __future__ import annotations

import math
from typing import Any, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict, Field

from . import __version__
from .bounds import bound_commutator, bound_epsilon_c, bound_epsilon_v
from .clock_core import ClockParams
from .config import Experiment, PotentialConfig, RunConfig
from .experiments import execute, write_report

app = FastAPI(title="chronon", version=__version__)


class ClockRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    d: int = Field(..., ge=2)
    T0: float = Field(1.0, gt=0)
    sigma: Optional[float] = Field(None, gt=0)
    n0: Optional[float] = None
    k0: float = 0.0

    def params(self) -> ClockParams:
        return ClockParams(d=self.d, T0=self.T0, sigma=self.sigma, n0=self.n0, k0=self.k0)


class TimedClockRequest(ClockRequest):
    t: float = 0.0


class PotentialRequest(TimedClockRequest):
    potential: PotentialConfig = Field(default_factory=PotentialConfig)


class BoundResponse(BaseModel):
    name: str
    total: Any
    terms: dict[str, Any]
    weights: dict[str, float]
    regime: str
    valid: bool
    info: dict[str, Any]


class RunResponse(BaseModel):
    experiment: str
    passed: bool
    checks: dict[str, bool]
    summary: dict[str, Any]
    tables: dict[str, Any]
    written: list[str] = []


def _finite(v: Any) -> Any:
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, dict):
        return {k: _finite(x) for k, x in v.items()}
    return v


def _bound_response(rep) -> BoundResponse:
    return BoundResponse(**_finite(rep.to_dict()))


def _params(req: ClockRequest) -> ClockParams:
    try:
        return req.params()
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


@app.get("/health")
def health() -> dict[str, str]:
    return {"status": "ok", "version": __version__}


@app.get("/experiments")
def experiments() -> list[str]:
    return [e.value for e in Experiment]


@app.post("/bounds/epsilon-c", response_model=BoundResponse)
def epsilon_c(req: TimedClockRequest) -> BoundResponse:
    return _bound_response(bound_epsilon_c(_params(req), req.t))


@app.post("/bounds/epsilon-v", response_model=BoundResponse)
def epsilon_v(req: PotentialRequest) -> BoundResponse:
    return _bound_response(bound_epsilon_v(_params(req), req.potential.build(), req.t))


@app.post("/bounds/commutator", response_model=BoundResponse)
def commutator(req: ClockRequest) -> BoundResponse:
    try:
        return _bound_response(bound_commutator(_params(req)))
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


@app.post("/experiments/run", response_model=RunResponse)
def run(cfg: RunConfig, threads: int = 1) -> RunResponse:
    try:
        report = execute(cfg, threads=threads)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    written = write_report(report, cfg.output_dir, cfg) if cfg.output_dir is not None else []
    return RunResponse(**report.to_dict(), written=[str(p) for p in written])
