"""Pydantic request/response models for the HTTP API.

The CLI builds the same models and calls the same handlers in-process, so the
wire format and the command line stay in lockstep.
"""

from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field


class NeuronModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    id: str
    kind: Literal["input", "hidden", "output"] = "hidden"


class SynapseModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    pre: str
    post: str
    weight: float
    spike_count: int = Field(ge=0)


class WorkloadModel(BaseModel):
    """Inline form of the workload file format."""

    model_config = ConfigDict(extra="forbid")
    window_seconds: float = Field(gt=0)
    neurons: list[NeuronModel]
    synapses: list[SynapseModel]


class SynthRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    pattern: Literal["feedforward", "convolutional-sparse", "recurrent-reservoir"]
    layers: list[int]
    rate_hz: float = Field(ge=0)
    window_seconds: float = Field(default=1.0, gt=0)
    seed: int = Field(default=0, ge=0)
    conn_prob: float = Field(default=0.1, ge=0, le=1)
    kernel: int = Field(default=9, ge=1)
    hot_fraction: float = Field(default=0.0, ge=0, le=1)
    hot_multiplier: float = Field(default=1.0, ge=0)


class RunRequest(BaseModel):
    """One workload source (inline or synthesized), optional hardware overrides,
    and the mapping options."""

    model_config = ConfigDict(extra="forbid")
    workload: Optional[WorkloadModel] = None
    synth: Optional[SynthRequest] = None
    hardware: Optional[dict[str, Any]] = None
    techniques: list[str] = ["thermal"]
    max_iter: int = Field(default=100, ge=1)
    seed: int = Field(default=0, ge=0)
    tol: float = Field(default=1e-3, gt=0)
    max_sweeps: int = Field(default=1000, ge=1)
    naive_intra_placement: bool = False
    threads: int = Field(default=1, ge=1)
    include_traces: bool = False


class EnergyModel(BaseModel):
    spike_energy_j: float
    routing_energy_j: float
    leakage_energy_j: float
    total_energy_j: float
    leakage_share: float
    leakage_power_total_w: float
    leakage_power_per_tile_w: list[float]
    latency_s: float
    max_avg_temperature_k: float
    peak_temperature_k: float
    thermal_safety: bool


class TraceRowModel(BaseModel):
    restart: int
    sweep: int
    best_score: float
    elapsed_ms: float


class TechniqueResultModel(BaseModel):
    technique: str
    mapping: list[int]
    max_avg_temp_k: float
    comm_cost: float
    energy: EnergyModel
    compile_time_seconds: float
    trace: Optional[list[TraceRowModel]] = None


class ComparisonModel(BaseModel):
    schema_version: int
    tool_version: str
    seed: int
    max_iter: int
    workload: dict[str, Any]
    clustering: dict[str, Any]
    hardware: dict[str, Any]
    techniques: list[TechniqueResultModel]
    deltas: Optional[dict[str, Any]] = None


class SweepRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    run: RunRequest
    iters: list[int]


class SweepRowModel(BaseModel):
    max_iter: int
    compile_time_s: float
    max_avg_temp_k: float


class SweepResponse(BaseModel):
    rows: list[SweepRowModel]


class ValidateHardwareRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    hardware: dict[str, Any]


class ValidateResponse(BaseModel):
    valid: bool
    error_class: Optional[str] = None
    message: Optional[str] = None


class HealthResponse(BaseModel):
    status: str
    version: str


class ErrorBody(BaseModel):
    error_class: str
    message: str
