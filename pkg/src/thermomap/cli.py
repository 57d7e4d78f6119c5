"""Command-line front end. A thin client: flags are parsed into the same
request/config objects the HTTP service uses, the pipeline does the work, and
results land in the output directory.

Exit codes: 0 success, 2 config error, 3 infeasible workload, 4 thermal
non-convergence, 5 guard violation. Failures print one machine-parseable line
to stderr: error class=<slug> message=<json string>.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from . import __version__
from .errors import ConfigError, ThermomapError
from .clustering import check_crossbar_feasibility
from .hardware import load_hardware
from .pipeline import (TECHNIQUES, ComparisonResult, RunConfig, RunOptions,
                       resolve_hardware, resolve_workload, run_pipeline,
                       sweep_max_iter, sweep_to_csv)
from .power import format_report_text
from .workload import SynthSpec, emit_workload, parse_synth_string, parse_workload, synthesize_workload


def _fail(exc: ThermomapError) -> None:
    sys.stderr.write(f"error class={exc.error_class} message={json.dumps(str(exc))}\n")
    sys.exit(exc.exit_code)


def tool_errors(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except ThermomapError as exc:
            _fail(exc)
    return wrapper


def workload_options(func):
    func = click.option("--workload", "workload_path", type=str, default=None,
                        help="Path to a workload JSON file.")(func)
    func = click.option("--synth", "synth_string", type=str, default=None,
                        help="Synthesize a workload: '<pattern>:<sizes>', e.g. ff:784,100,10.")(func)
    func = click.option("--rate", type=float, default=10.0, show_default=True,
                        help="Mean activation rate in Hz for synthesized workloads.")(func)
    func = click.option("--window", type=float, default=1.0, show_default=True,
                        help="Simulation window in seconds for synthesized workloads.")(func)
    func = click.option("--conn-prob", type=float, default=0.1, show_default=True,
                        help="Connection probability for recurrent-reservoir synthesis.")(func)
    func = click.option("--kernel", type=int, default=9, show_default=True,
                        help="Fan-in kernel for convolutional-sparse synthesis.")(func)
    func = click.option("--hot-fraction", type=float, default=0.0, show_default=True,
                        help="Fraction of neurons firing at rate * hot-multiplier.")(func)
    func = click.option("--hot-multiplier", type=float, default=1.0, show_default=True,
                        help="Rate multiplier for the hot neuron subset.")(func)
    return func


def mapping_options(func):
    func = click.option("--hardware", "hardware_path", type=str, default=None,
                        help="Path to a hardware config JSON file (defaults apply).")(func)
    func = click.option("--max-iter", type=int, default=100, show_default=True,
                        help="Random restarts for the hill climber.")(func)
    func = click.option("--seed", type=int, default=0, show_default=True,
                        help="Run seed; all stage RNG streams derive from it.")(func)
    func = click.option("--tol", type=float, default=1e-3, show_default=True,
                        help="Thermal convergence tolerance in Kelvin.")(func)
    func = click.option("--max-sweeps", type=int, default=1000, show_default=True,
                        help="Sweep budget for the thermal solver.")(func)
    func = click.option("--threads", type=int, default=1, show_default=True,
                        help="Worker threads for mapper restarts (same output for any value).")(func)
    func = click.option("--naive-intra-placement", is_flag=True, default=False,
                        help="Disable thermally-aware row/column ordering inside crossbars.")(func)
    func = click.option("--output", "output_dir", type=str, default="thermomap-out",
                        show_default=True, help="Directory for report.json and dumps.")(func)
    func = click.option("--dump-clusters", is_flag=True, default=False,
                        help="Write clusters.json with placements.")(func)
    func = click.option("--dump-thermal", is_flag=True, default=False,
                        help="Write per-tile thermal fields as CSV.")(func)
    func = click.option("--dump-trace", is_flag=True, default=False,
                        help="Write per-technique search traces as CSV.")(func)
    return func


def _build_synth(kwargs: dict, seed: int) -> SynthSpec | None:
    if kwargs["synth_string"] is None:
        return None
    pattern, layers = parse_synth_string(kwargs["synth_string"])
    return SynthSpec(
        pattern=pattern, layers=layers, rate_hz=kwargs["rate"],
        window_seconds=kwargs["window"], seed=seed, conn_prob=kwargs["conn_prob"],
        kernel=kwargs["kernel"], hot_fraction=kwargs["hot_fraction"],
        hot_multiplier=kwargs["hot_multiplier"])


def _build_config(kwargs: dict, techniques: tuple[str, ...]) -> RunConfig:
    options = RunOptions(
        techniques=techniques,
        max_iter=kwargs["max_iter"],
        seed=kwargs["seed"],
        tol=kwargs["tol"],
        max_sweeps=kwargs["max_sweeps"],
        naive_intra_placement=kwargs["naive_intra_placement"],
        threads=kwargs["threads"],
    )
    return RunConfig(
        workload_path=kwargs["workload_path"],
        synth=_build_synth(kwargs, kwargs["seed"]),
        hardware_path=kwargs["hardware_path"],
        output_dir=kwargs["output_dir"],
        options=options,
        dump_clusters=kwargs["dump_clusters"],
        dump_thermal=kwargs["dump_thermal"],
        dump_trace=kwargs["dump_trace"],
    )


def _print_summary(result: ComparisonResult) -> None:
    click.echo(f"clusters={len(result.clustered.clusters)} "
               f"channels={len(result.clustered.channels)} "
               f"total_spikes={result.clustered.total_spike_count}")
    for tr in result.techniques:
        click.echo(f"\n[{tr.technique}] mapping={list(tr.mapping.assignment)} "
                   f"max_avg_temp={tr.score.max_avg_temp:.3f} K "
                   f"comm_cost={tr.score.comm_cost:.0f} spike-hops "
                   f"compile_time={tr.compile_time_seconds:.2f} s")
        click.echo(format_report_text(tr.score.report), nl=False)
    if result.deltas is not None:
        click.echo("\ndeltas (candidate vs baseline):")
        for key, value in result.deltas.items():
            click.echo(f"  {key} = {value}")


@click.group()
@click.version_option(version=__version__)
def main() -> None:
    """Thermal-aware mapping of SNN workloads onto crossbar neuromorphic hardware."""


@main.command("run")
@workload_options
@mapping_options
@click.option("--technique", type=click.Choice(TECHNIQUES), default="thermal",
              show_default=True, help="Mapping technique.")
@tool_errors
def run_cmd(technique: str, **kwargs) -> None:
    """Run the pipeline with one technique and write report.json."""
    cfg = _build_config(kwargs, (technique,))
    result = run_pipeline(cfg)
    _print_summary(result)
    click.echo(f"\nreport written to {Path(cfg.output_dir) / 'report.json'}")


@main.command("compare")
@workload_options
@mapping_options
@click.option("--techniques", "techniques_csv", type=str, default="thermal,perf-baseline",
              show_default=True, help="Comma-separated techniques to compare.")
@tool_errors
def compare_cmd(techniques_csv: str, **kwargs) -> None:
    """Run several techniques on one workload and report deltas."""
    techniques = tuple(t.strip() for t in techniques_csv.split(",") if t.strip())
    cfg = _build_config(kwargs, techniques)
    result = run_pipeline(cfg)
    _print_summary(result)
    click.echo(f"\nreport written to {Path(cfg.output_dir) / 'report.json'}")


@main.command("sweep")
@workload_options
@mapping_options
@click.option("--iters", "iters_csv", type=str, default="10,100,1000", show_default=True,
              help="Comma-separated restart budgets to sweep.")
@tool_errors
def sweep_cmd(iters_csv: str, **kwargs) -> None:
    """Compile-time/solution-quality tradeoff over hill-climb restart budgets."""
    try:
        iters = [int(part) for part in iters_csv.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --iters value {iters_csv!r}") from exc
    cfg = _build_config(kwargs, ("thermal",))
    w = resolve_workload(cfg)
    hw = resolve_hardware(cfg)
    rows = sweep_max_iter(w, hw, cfg.options, iters)
    csv_text = sweep_to_csv(rows)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(csv_text)
    click.echo(csv_text, nl=False)
    click.echo(f"\nsweep table written to {out / 'sweep.csv'}")


@main.command("synth")
@workload_options
@click.option("--seed", type=int, default=0, show_default=True, help="Synthesis seed.")
@click.option("--out", "out_path", type=str, required=True,
              help="Where to write the workload JSON file.")
@tool_errors
def synth_cmd(seed: int, out_path: str, **kwargs) -> None:
    """Generate a synthetic workload file."""
    if kwargs["workload_path"] is not None:
        raise ConfigError("synth takes --synth, not --workload")
    spec = _build_synth(kwargs, seed)
    if spec is None:
        raise ConfigError("synth requires a --synth spec, e.g. --synth ff:784,100,10")
    w = synthesize_workload(spec)
    Path(out_path).write_text(emit_workload(w))
    click.echo(f"wrote {len(w.neurons)} neurons, {len(w.synapses)} synapses to {out_path}")


@main.command("validate-config")
@click.option("--hardware", "hardware_path", type=str, default=None,
              help="Hardware config JSON to validate.")
@click.option("--workload", "workload_path", type=str, default=None,
              help="Workload JSON to validate (and check against the hardware, if given).")
@tool_errors
def validate_cmd(hardware_path: str | None, workload_path: str | None) -> None:
    """Validate a hardware config and/or workload file."""
    if hardware_path is None and workload_path is None:
        raise ConfigError("nothing to validate: pass --hardware and/or --workload")
    hw = None
    if hardware_path is not None:
        path = Path(hardware_path)
        if not path.is_file():
            raise ConfigError(f"hardware config not found: {hardware_path}")
        hw = load_hardware(path.read_bytes())
        click.echo(f"hardware config ok: {hardware_path}")
    if workload_path is not None:
        path = Path(workload_path)
        if not path.is_file():
            raise ConfigError(f"workload file not found: {workload_path}")
        w = parse_workload(path.read_bytes())
        click.echo(f"workload ok: {workload_path} "
                   f"({len(w.neurons)} neurons, {len(w.synapses)} synapses)")
        if hw is not None:
            check_crossbar_feasibility(w, hw)
            click.echo("workload fits the crossbar fan-in/fan-out limits")


if __name__ == "__main__":
    main()
