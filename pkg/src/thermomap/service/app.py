"""FastAPI service wrapping the mapping pipeline.

Run with: uvicorn thermomap.service.app:app
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import (ConfigError, GuardError, InfeasibleWorkloadError,
                      NonConvergenceError, ThermomapError)
from . import handlers
from .schemas import (ComparisonModel, ErrorBody, HealthResponse, RunRequest,
                      SweepRequest, SweepResponse, SynthRequest,
                      ValidateHardwareRequest, ValidateResponse, WorkloadModel)

_HTTP_STATUS = {
    ConfigError: 400,
    InfeasibleWorkloadError: 422,
    GuardError: 422,
    NonConvergenceError: 409,
}

app = FastAPI(
    title="thermomap",
    version=__version__,
    description="Thermal-aware mapping of SNN workloads onto crossbar-based "
                "neuromorphic hardware.",
)


@app.exception_handler(ThermomapError)
async def thermomap_error_handler(_request: Request, exc: ThermomapError) -> JSONResponse:
    status = 500
    for klass, code in _HTTP_STATUS.items():
        if isinstance(exc, klass):
            status = code
            break
    body = ErrorBody(error_class=exc.error_class, message=str(exc))
    return JSONResponse(status_code=status, content=body.model_dump())


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.get("/defaults/hardware")
def defaults_hardware() -> dict:
    return handlers.default_hardware_doc()


@app.post("/synth", response_model=WorkloadModel)
def synth(req: SynthRequest) -> WorkloadModel:
    return handlers.handle_synth(req)


@app.post("/validate/hardware", response_model=ValidateResponse)
def validate_hardware(req: ValidateHardwareRequest) -> ValidateResponse:
    return handlers.handle_validate_hardware(req)


@app.post("/run", response_model=ComparisonModel)
def run(req: RunRequest) -> ComparisonModel:
    model, _result = handlers.handle_run(req)
    return model


@app.post("/sweep", response_model=SweepResponse)
def sweep(req: SweepRequest) -> SweepResponse:
    return handlers.handle_sweep(req)
