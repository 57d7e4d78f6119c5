"""Leakage power, dynamic energy, and latency estimation.

Leakage current through a cell's access transistor sits at its nominal value up
to the nominal temperature and grows as a power law in the excess above it.
Dynamic energy is a per-spike constant plus a per-hop routing constant over the
tile mesh; latency is the simulation window plus serialization on the most
loaded mesh link under dimension-ordered routing.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import NonConvergenceError
from .hardware import HardwareModel, LeakageParams
from .thermal import ThermalField

if TYPE_CHECKING:
    from .clustering import ClusteredWorkload
    from .mapper import Mapping

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnergyReport:
    leakage_power_per_tile_w: tuple[float, ...]
    leakage_power_total_w: float
    spike_energy_j: float
    routing_energy_j: float
    leakage_energy_j: float
    total_energy_j: float
    leakage_share: float
    latency_s: float
    max_avg_temperature_k: float
    peak_temperature_k: float
    thermal_safety: bool


def leakage_current(t_cell: float, p: LeakageParams) -> float:
    """Access-transistor leakage at the given cell temperature.

    Clamped to the nominal floor below t_nominal; above it the fitted power-law
    excess is added on top of the floor, keeping the curve continuous and
    monotone.
    """
    if not (math.isfinite(t_cell) and t_cell > 0):
        raise ValueError(f"t_cell must be positive, got {t_cell!r}")
    if t_cell <= p.t_nominal:
        return p.i_nominal
    return p.i_nominal * (1.0 + p.a_fit * (t_cell - p.t_nominal) ** p.eta)


def leakage_current_grid(temperature: np.ndarray, p: LeakageParams) -> np.ndarray:
    excess = np.maximum(temperature - p.t_nominal, 0.0)
    return p.i_nominal * (1.0 + p.a_fit * excess ** p.eta)


def tile_leakage_power(field: ThermalField, hw: HardwareModel) -> float:
    """Total leakage power of one crossbar: sum of cell leakage times v_dd."""
    if not field.converged:
        raise NonConvergenceError("cannot compute leakage power from an unconverged field")
    return float(np.sum(leakage_current_grid(field.temperature, hw.leakage)) * hw.v_dd)


def mesh_shape(n_tiles: int) -> tuple[int, int]:
    """Near-square mesh housing n_tiles, row-major tile indexing."""
    cols = math.ceil(math.sqrt(n_tiles))
    rows = math.ceil(n_tiles / cols)
    return rows, cols


def tile_coords(tile: int, hw: HardwareModel) -> tuple[int, int]:
    _, cols = mesh_shape(hw.n_tiles)
    return tile // cols, tile % cols


def hops(src_tile: int, dst_tile: int, hw: HardwareModel) -> int:
    """Manhattan distance between tiles on the mesh; 0 for the same tile."""
    (r1, c1), (r2, c2) = tile_coords(src_tile, hw), tile_coords(dst_tile, hw)
    return abs(r1 - r2) + abs(c1 - c2)


def route_links(src_tile: int, dst_tile: int, hw: HardwareModel) -> list[tuple[int, int]]:
    """Directed links traversed under X-then-Y dimension-ordered routing."""
    _, cols = mesh_shape(hw.n_tiles)
    r, c = tile_coords(src_tile, hw)
    r2, c2 = tile_coords(dst_tile, hw)
    links = []
    while c != c2:
        nxt = c + (1 if c2 > c else -1)
        links.append((r * cols + c, r * cols + nxt))
        c = nxt
    while r != r2:
        nxt = r + (1 if r2 > r else -1)
        links.append((r * cols + c, nxt * cols + c))
        r = nxt
    return links


def traffic_energy_and_latency(cw: "ClusteredWorkload", m: "Mapping",
                               hw: HardwareModel) -> tuple[float, float, float]:
    """(spike energy, routing energy, latency) for a complete mapping."""
    if len(m.assignment) != len(cw.clusters):
        raise ValueError(
            f"mapping covers {len(m.assignment)} clusters, workload has {len(cw.clusters)}")
    spike_energy = cw.total_spike_count * hw.e_spike
    routing_energy = 0.0
    link_load: dict[tuple[int, int], int] = {}
    for ch in cw.channels:
        src_tile = m.assignment[ch.src]
        dst_tile = m.assignment[ch.dst]
        routing_energy += ch.spike_count * hops(src_tile, dst_tile, hw) * hw.e_route
        for link in route_links(src_tile, dst_tile, hw):
            link_load[link] = link_load.get(link, 0) + ch.spike_count
    worst_load = max(link_load.values(), default=0)
    latency = cw.window_seconds + worst_load / hw.bandwidth
    return spike_energy, routing_energy, latency


def build_energy_report(cw: "ClusteredWorkload", m: "Mapping",
                        fields: list[ThermalField], hw: HardwareModel) -> EnergyReport:
    """Assemble the full energy/latency/thermal report from per-tile fields."""
    if len(fields) != hw.n_tiles:
        raise ValueError(f"expected {hw.n_tiles} tile fields, got {len(fields)}")
    per_tile = tuple(tile_leakage_power(f, hw) for f in fields)
    leakage_power_total = sum(per_tile)

    spike_energy, routing_energy, latency = traffic_energy_and_latency(cw, m, hw)
    leakage_energy = leakage_power_total * latency
    total_energy = spike_energy + routing_energy + leakage_energy
    leakage_share = leakage_energy / total_energy if total_energy > 0 else 0.0

    averages = [float(np.mean(f.temperature)) for f in fields]
    peaks = [float(np.max(f.temperature)) for f in fields]
    peak = max(peaks)
    safe = peak < hw.pcm.crystallization_temp
    if not safe:
        log.warning("peak cell temperature %.2f K reaches the crystallization point (%.1f K)",
                    peak, hw.pcm.crystallization_temp)

    return EnergyReport(
        leakage_power_per_tile_w=per_tile,
        leakage_power_total_w=leakage_power_total,
        spike_energy_j=spike_energy,
        routing_energy_j=routing_energy,
        leakage_energy_j=leakage_energy,
        total_energy_j=total_energy,
        leakage_share=leakage_share,
        latency_s=latency,
        max_avg_temperature_k=max(averages),
        peak_temperature_k=peak,
        thermal_safety=safe,
    )


def format_report_text(report: EnergyReport) -> str:
    """Aligned-column human rendering of an energy report."""
    rows = [
        ("spike_energy_j", f"{report.spike_energy_j:.6e}"),
        ("routing_energy_j", f"{report.routing_energy_j:.6e}"),
        ("leakage_energy_j", f"{report.leakage_energy_j:.6e}"),
        ("total_energy_j", f"{report.total_energy_j:.6e}"),
        ("leakage_share", f"{report.leakage_share:.4f}"),
        ("leakage_power_total_w", f"{report.leakage_power_total_w:.6e}"),
        ("latency_s", f"{report.latency_s:.6e}"),
        ("max_avg_temperature_k", f"{report.max_avg_temperature_k:.3f}"),
        ("peak_temperature_k", f"{report.peak_temperature_k:.3f}"),
        ("thermal_safety", str(report.thermal_safety).lower()),
    ]
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name:<{width}}  {value}" for name, value in rows) + "\n"
