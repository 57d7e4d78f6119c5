"""Request handlers shared by the HTTP routes and the CLI."""

from __future__ import annotations

import json

from .. import __version__
from ..errors import ConfigError, ThermomapError
from ..hardware import HardwareModel, default_hardware, emit_hardware, load_hardware
from ..pipeline import (ComparisonResult, RunOptions, report_doc, run_comparison,
                        sweep_max_iter)
from ..workload import SnnWorkload, Neuron, Synapse, SynthSpec, synthesize_workload
from .schemas import (ComparisonModel, RunRequest, SweepRequest, SweepResponse,
                      SweepRowModel, SynthRequest, TechniqueResultModel,
                      TraceRowModel, ValidateHardwareRequest, ValidateResponse,
                      WorkloadModel)


def synth_spec_from_request(req: SynthRequest) -> SynthSpec:
    return SynthSpec(
        pattern=req.pattern,
        layers=tuple(req.layers),
        rate_hz=req.rate_hz,
        window_seconds=req.window_seconds,
        seed=req.seed,
        conn_prob=req.conn_prob,
        kernel=req.kernel,
        hot_fraction=req.hot_fraction,
        hot_multiplier=req.hot_multiplier,
    )


def workload_from_model(model: WorkloadModel) -> SnnWorkload:
    return SnnWorkload(
        neurons=tuple(Neuron(id=n.id, kind=n.kind) for n in model.neurons),
        synapses=tuple(Synapse(pre=s.pre, post=s.post, weight=s.weight,
                               spike_count=s.spike_count) for s in model.synapses),
        window_seconds=model.window_seconds,
    )


def workload_to_model(w: SnnWorkload) -> WorkloadModel:
    return WorkloadModel(
        window_seconds=w.window_seconds,
        neurons=[{"id": n.id, "kind": n.kind} for n in w.neurons],
        synapses=[{"pre": s.pre, "post": s.post, "weight": s.weight,
                   "spike_count": s.spike_count} for s in w.synapses],
    )


def _resolve_inputs(req: RunRequest) -> tuple[SnnWorkload, HardwareModel]:
    if (req.workload is None) == (req.synth is None):
        raise ConfigError("exactly one of 'workload' or 'synth' is required")
    if req.workload is not None:
        w = workload_from_model(req.workload)
    else:
        w = synthesize_workload(synth_spec_from_request(req.synth))
    hw = load_hardware(req.hardware) if req.hardware is not None else default_hardware()
    return w, hw


def run_options_from_request(req: RunRequest) -> RunOptions:
    return RunOptions(
        techniques=tuple(req.techniques),
        max_iter=req.max_iter,
        seed=req.seed,
        tol=req.tol,
        max_sweeps=req.max_sweeps,
        naive_intra_placement=req.naive_intra_placement,
        threads=req.threads,
    )


def comparison_to_model(result: ComparisonResult, include_traces: bool = False) -> ComparisonModel:
    doc = report_doc(result)
    techniques = []
    for tr, tdoc in zip(result.techniques, doc["techniques"]):
        trace = None
        if include_traces:
            trace = [TraceRowModel(restart=row.restart, sweep=row.sweep,
                                   best_score=row.best_score, elapsed_ms=row.elapsed_ms)
                     for row in tr.trace]
        techniques.append(TechniqueResultModel(
            technique=tr.technique,
            mapping=tdoc["mapping"],
            max_avg_temp_k=tdoc["max_avg_temp_k"],
            comm_cost=tdoc["comm_cost"],
            energy=tdoc["energy"],
            compile_time_seconds=tr.compile_time_seconds,
            trace=trace,
        ))
    return ComparisonModel(
        schema_version=doc["schema_version"],
        tool_version=__version__,
        seed=doc["seed"],
        max_iter=doc["max_iter"],
        workload=doc["workload"],
        clustering=doc["clustering"],
        hardware=doc["hardware"],
        techniques=techniques,
        deltas=doc["deltas"],
    )


def handle_run(req: RunRequest) -> tuple[ComparisonModel, ComparisonResult]:
    w, hw = _resolve_inputs(req)
    result = run_comparison(w, hw, run_options_from_request(req))
    return comparison_to_model(result, include_traces=req.include_traces), result


def handle_synth(req: SynthRequest) -> WorkloadModel:
    return workload_to_model(synthesize_workload(synth_spec_from_request(req)))


def handle_sweep(req: SweepRequest) -> SweepResponse:
    w, hw = _resolve_inputs(req.run)
    rows = sweep_max_iter(w, hw, run_options_from_request(req.run), list(req.iters))
    return SweepResponse(rows=[
        SweepRowModel(max_iter=r.max_iter, compile_time_s=r.compile_time_s,
                      max_avg_temp_k=r.max_avg_temp_k)
        for r in rows
    ])


def handle_validate_hardware(req: ValidateHardwareRequest) -> ValidateResponse:
    try:
        load_hardware(req.hardware)
    except ThermomapError as exc:
        return ValidateResponse(valid=False, error_class=exc.error_class, message=str(exc))
    return ValidateResponse(valid=True)


def default_hardware_doc() -> dict:
    return json.loads(emit_hardware(default_hardware()))
