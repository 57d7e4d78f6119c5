"""End-to-end pipeline: parse/synthesize -> cluster -> map -> solve -> report.

All randomness branches from one run seed through fixed tags (synthesis,
clustering, mapper restart index), so every stage is independently reproducible
and two runs with the same seed produce byte-identical report.json regardless
of thread count. Wall-clock timings are volatile by nature and are therefore
written to a separate timings.json, never into report.json.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .clustering import ClusteredWorkload, cluster_workload, clusters_to_doc, place_synapses_in_crossbar
from .errors import ConfigError
from .hardware import HardwareModel, default_hardware, load_hardware
from .mapper import (OBJECTIVE_COMM, OBJECTIVE_THERMAL, Mapping, MappingScore,
                     TileEvaluator, TraceRow, baseline_perf_map, exhaustive_map,
                     hill_climb, trace_to_csv)
from .power import EnergyReport
from .thermal import DEFAULT_MAX_SWEEPS, DEFAULT_TOL, ThermalField, emit_thermal_csv
from .workload import SnnWorkload, SynthSpec, parse_workload, synthesize_workload, workload_summary

SCHEMA_VERSION = 1

TECHNIQUE_THERMAL = "thermal"
TECHNIQUE_PERF = "perf-baseline"
TECHNIQUE_EXHAUSTIVE = "exhaustive"
TECHNIQUES = (TECHNIQUE_THERMAL, TECHNIQUE_PERF, TECHNIQUE_EXHAUSTIVE)


@dataclass(frozen=True)
class RunOptions:
    techniques: tuple[str, ...] = (TECHNIQUE_THERMAL,)
    max_iter: int = 100
    seed: int = 0
    tol: float = DEFAULT_TOL
    max_sweeps: int = DEFAULT_MAX_SWEEPS
    naive_intra_placement: bool = False
    threads: int = 1


@dataclass
class RunConfig:
    """CLI-facing run description: file inputs, outputs, and dump switches."""

    workload_path: str | None = None
    synth: SynthSpec | None = None
    hardware_path: str | None = None
    output_dir: str = "thermomap-out"
    options: RunOptions = field(default_factory=RunOptions)
    dump_clusters: bool = False
    dump_thermal: bool = False
    dump_trace: bool = False


@dataclass
class TechniqueResult:
    technique: str
    mapping: Mapping
    score: MappingScore
    trace: list[TraceRow]
    fields: list[ThermalField]
    compile_time_seconds: float
    objective_name: str


@dataclass
class ComparisonResult:
    workload: SnnWorkload
    hardware: HardwareModel
    clustered: ClusteredWorkload
    options: RunOptions
    techniques: list[TechniqueResult]
    deltas: dict | None


def _validate_options(opts: RunOptions) -> None:
    if not opts.techniques:
        raise ConfigError("at least one technique is required")
    for t in opts.techniques:
        if t not in TECHNIQUES:
            raise ConfigError(f"unknown technique {t!r}, expected one of {TECHNIQUES}")
    if len(set(opts.techniques)) != len(opts.techniques):
        raise ConfigError(f"duplicate technique in {opts.techniques}")
    if opts.max_iter < 1:
        raise ConfigError(f"max_iter must be >= 1, got {opts.max_iter}")
    if opts.threads < 1:
        raise ConfigError(f"threads must be >= 1, got {opts.threads}")
    if opts.tol <= 0:
        raise ConfigError(f"tol must be positive, got {opts.tol}")
    if opts.max_sweeps < 1:
        raise ConfigError(f"max_sweeps must be >= 1, got {opts.max_sweeps}")
    if opts.seed < 0:
        raise ConfigError(f"seed must be >= 0, got {opts.seed}")


def _run_technique(technique: str, cw: ClusteredWorkload, hw: HardwareModel,
                   opts: RunOptions) -> TechniqueResult:
    t0 = time.perf_counter()
    trace: list[TraceRow] = []
    if technique == TECHNIQUE_THERMAL:
        mapping, score, trace = hill_climb(
            cw, hw, max_iter=opts.max_iter, seed=opts.seed, tol=opts.tol,
            max_sweeps=opts.max_sweeps, naive_placement=opts.naive_intra_placement,
            threads=opts.threads)
        objective = OBJECTIVE_THERMAL
    elif technique == TECHNIQUE_PERF:
        mapping, score, trace = baseline_perf_map(
            cw, hw, max_iter=opts.max_iter, seed=opts.seed, tol=opts.tol,
            max_sweeps=opts.max_sweeps, naive_placement=opts.naive_intra_placement,
            threads=opts.threads)
        objective = OBJECTIVE_COMM
    else:
        mapping, score = exhaustive_map(
            cw, hw, tol=opts.tol, max_sweeps=opts.max_sweeps,
            naive_placement=opts.naive_intra_placement)
        objective = OBJECTIVE_THERMAL
    elapsed = time.perf_counter() - t0

    ev = TileEvaluator(cw, hw, tol=opts.tol, max_sweeps=opts.max_sweeps,
                       naive_placement=opts.naive_intra_placement)
    fields = ev.fields(mapping.assignment)
    return TechniqueResult(technique=technique, mapping=mapping, score=score,
                           trace=trace, fields=fields,
                           compile_time_seconds=elapsed, objective_name=objective)


def _deltas(results: list[TechniqueResult]) -> dict | None:
    """Candidate-vs-baseline deltas; defined when exactly two techniques ran."""
    if len(results) != 2:
        return None
    cand, base = results
    c, b = cand.score.report, base.score.report

    def pct(candidate: float, baseline: float) -> float | None:
        return 100.0 * (candidate - baseline) / baseline if baseline != 0 else None

    return {
        "candidate": cand.technique,
        "baseline": base.technique,
        "temperature_reduction_k": base.score.max_avg_temp - cand.score.max_avg_temp,
        "leakage_power_change_pct": pct(c.leakage_power_total_w, b.leakage_power_total_w),
        "leakage_energy_change_pct": pct(c.leakage_energy_j, b.leakage_energy_j),
        "latency_change_pct": pct(c.latency_s, b.latency_s),
        "total_energy_change_pct": pct(c.total_energy_j, b.total_energy_j),
    }


def run_comparison(w: SnnWorkload, hw: HardwareModel, opts: RunOptions) -> ComparisonResult:
    """Cluster once, then place with every requested technique."""
    _validate_options(opts)
    cw = cluster_workload(w, hw, seed=opts.seed)
    results = [_run_technique(t, cw, hw, opts) for t in opts.techniques]
    return ComparisonResult(workload=w, hardware=hw, clustered=cw, options=opts,
                            techniques=results, deltas=_deltas(results))


def _energy_doc(report: EnergyReport) -> dict:
    return {
        "spike_energy_j": report.spike_energy_j,
        "routing_energy_j": report.routing_energy_j,
        "leakage_energy_j": report.leakage_energy_j,
        "total_energy_j": report.total_energy_j,
        "leakage_share": report.leakage_share,
        "leakage_power_total_w": report.leakage_power_total_w,
        "leakage_power_per_tile_w": list(report.leakage_power_per_tile_w),
        "latency_s": report.latency_s,
        "max_avg_temperature_k": report.max_avg_temperature_k,
        "peak_temperature_k": report.peak_temperature_k,
        "thermal_safety": report.thermal_safety,
    }


def report_doc(result: ComparisonResult) -> dict:
    """Canonical report.json content. Excludes wall-clock timings by design."""
    return {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "seed": result.options.seed,
        "max_iter": result.options.max_iter,
        "workload": workload_summary(result.workload),
        "clustering": {
            "clusters": len(result.clustered.clusters),
            "channels": len(result.clustered.channels),
            "cut_synapses": sum(ch.cut_synapses for ch in result.clustered.channels),
        },
        "hardware": {
            "n_tiles": result.hardware.n_tiles,
            "crossbar_dim": result.hardware.crossbar_dim,
            "clusters_per_tile": result.hardware.clusters_per_tile,
            "t_ambient": result.hardware.t_ambient,
        },
        "techniques": [
            {
                "technique": tr.technique,
                "mapping": list(tr.mapping.assignment),
                "max_avg_temp_k": tr.score.max_avg_temp,
                "comm_cost": tr.score.comm_cost,
                "energy": _energy_doc(tr.score.report),
            }
            for tr in result.techniques
        ],
        "deltas": result.deltas,
    }


def timings_doc(result: ComparisonResult) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "compile_time_seconds": {tr.technique: tr.compile_time_seconds
                                 for tr in result.techniques},
    }


def doc_to_json(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"


def resolve_workload(cfg: RunConfig) -> SnnWorkload:
    if (cfg.workload_path is None) == (cfg.synth is None):
        raise ConfigError("exactly one of a workload file or a synthesis spec is required")
    if cfg.workload_path is not None:
        path = Path(cfg.workload_path)
        if not path.is_file():
            raise ConfigError(f"workload file not found: {cfg.workload_path}")
        return parse_workload(path.read_bytes())
    return synthesize_workload(cfg.synth)


def resolve_hardware(cfg: RunConfig) -> HardwareModel:
    if cfg.hardware_path is None:
        return default_hardware()
    path = Path(cfg.hardware_path)
    if not path.is_file():
        raise ConfigError(f"hardware config not found: {cfg.hardware_path}")
    return load_hardware(path.read_bytes())


def _ensure_output_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {cfg.output_dir}: {exc}") from exc
    return out


def write_outputs(result: ComparisonResult, cfg: RunConfig) -> Path:
    out = _ensure_output_dir(cfg)
    report_path = out / "report.json"
    report_path.write_text(doc_to_json(report_doc(result)))
    (out / "timings.json").write_text(doc_to_json(timings_doc(result)))
    if len(result.techniques) > 1:
        (out / "comparison.csv").write_text(comparison_to_csv(result))

    if cfg.dump_clusters:
        placed = ClusteredWorkload(
            clusters=tuple(place_synapses_in_crossbar(c, result.hardware,
                                                      naive=result.options.naive_intra_placement)
                           for c in result.clustered.clusters),
            channels=result.clustered.channels,
            window_seconds=result.clustered.window_seconds,
            total_spike_count=result.clustered.total_spike_count,
            total_synapse_count=result.clustered.total_synapse_count,
        )
        (out / "clusters.json").write_text(doc_to_json(clusters_to_doc(placed)))

    for tr in result.techniques:
        if cfg.dump_thermal:
            for tile, fld in enumerate(tr.fields):
                path = out / f"thermal_{tr.technique}_tile{tile}.csv"
                path.write_text(emit_thermal_csv(fld))
        if cfg.dump_trace and tr.trace:
            (out / f"trace_{tr.technique}.csv").write_text(
                trace_to_csv(tr.trace, tr.objective_name))
    return report_path


def comparison_to_csv(result: ComparisonResult) -> str:
    """Per-technique metrics as a flat CSV for plotting tools."""
    lines = ["technique,max_avg_temp_K,peak_temp_K,comm_cost,leakage_power_W,"
             "latency_s,spike_energy_J,routing_energy_J,leakage_energy_J,total_energy_J"]
    for tr in result.techniques:
        r = tr.score.report
        lines.append(
            f"{tr.technique},{tr.score.max_avg_temp:.6f},{r.peak_temperature_k:.6f},"
            f"{tr.score.comm_cost:.0f},{r.leakage_power_total_w:.9e},{r.latency_s:.9e},"
            f"{r.spike_energy_j:.9e},{r.routing_energy_j:.9e},{r.leakage_energy_j:.9e},"
            f"{r.total_energy_j:.9e}")
    return "\n".join(lines) + "\n"


def run_pipeline(cfg: RunConfig) -> ComparisonResult:
    """Execute the full pipeline and write report.json plus requested dumps."""
    w = resolve_workload(cfg)
    hw = resolve_hardware(cfg)
    result = run_comparison(w, hw, cfg.options)
    write_outputs(result, cfg)
    return result


@dataclass(frozen=True)
class SweepRow:
    max_iter: int
    compile_time_s: float
    max_avg_temp_k: float


def sweep_max_iter(w: SnnWorkload, hw: HardwareModel, opts: RunOptions,
                   iters: list[int]) -> list[SweepRow]:
    """Thermal-technique quality/compile-time tradeoff over restart budgets.

    Restart RNG streams are keyed by restart index, so the runs are nested:
    a larger budget replays the smaller budget's restarts and adds more, which
    makes the temperature column non-increasing for a fixed seed.
    """
    if not iters or any(i < 1 for i in iters):
        raise ConfigError(f"iters must be positive integers, got {iters}")
    _validate_options(opts)
    cw = cluster_workload(w, hw, seed=opts.seed)
    rows = []
    for max_iter in iters:
        t0 = time.perf_counter()
        _mapping, score, _trace = hill_climb(
            cw, hw, max_iter=max_iter, seed=opts.seed, tol=opts.tol,
            max_sweeps=opts.max_sweeps, naive_placement=opts.naive_intra_placement,
            threads=opts.threads)
        rows.append(SweepRow(max_iter=max_iter,
                             compile_time_s=time.perf_counter() - t0,
                             max_avg_temp_k=score.max_avg_temp))
    return rows


def sweep_to_csv(rows: list[SweepRow]) -> str:
    lines = ["max_iter,compile_time_s,max_avg_temp_K"]
    lines.extend(f"{r.max_iter},{r.compile_time_s:.3f},{r.max_avg_temp_k:.6f}" for r in rows)
    return "\n".join(lines) + "\n"
