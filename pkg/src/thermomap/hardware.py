"""Target hardware description: tiles, crossbar geometry, PCM constants, parasitics.

The chip is a mesh of tiles, each holding one n x n crossbar of PCM synapses.
Wordline/bitline interconnect resistance makes the read current of a cell depend
on its position: with drivers at column 0 and sensing at the bottom row, the
series path through cell (i, j) crosses j+1 wordline segments and n-i bitline
segments. A common spike voltage is sized so the worst (longest) path still
delivers the required read current, which over-drives every other cell.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Any

from .errors import ConfigError

# Interior-cell target for the sum of spatial coupling weights when k_coupling
# is left unset; must stay < 1 or the thermal fixed point is not a contraction.
INTERIOR_COUPLING_TARGET = 0.5


@dataclass(frozen=True)
class PcmParams:
    """Physical constants of one PCM synaptic cell (GST-like defaults)."""

    r_set: float = 10e3            # ohm, low-resistance (crystalline) state
    r_reset: float = 200e3         # ohm, high-resistance (amorphous) state
    k: float = 0.57                # W/(m*K), thermal conductivity
    heat_capacity_c: float = 1.25e6  # J/(m^3*K), volumetric heat capacity
    volume_v: float = 1.5e-22      # m^3, active region volume
    thickness_l: float = 100e-9    # m, chalcogenide thickness
    pulse_seconds: float = 100e-9  # s, duration of one read access
    crystallization_temp: float = 360.0  # K


@dataclass(frozen=True)
class ParasiticParams:
    """Interconnect parasitics and read-sensing requirements.

    v_spike may be None in a config, in which case it is calibrated at load
    time so the longest current path meets i_required.
    """

    r_wordline_seg: float = 5.0    # ohm per crossed cell on the wordline
    r_bitline_seg: float = 5.0     # ohm per crossed cell on the bitline
    v_spike: float | None = None   # V, common spike (read) voltage
    i_required: float = 10e-6      # A, read current needed for correct sensing


@dataclass(frozen=True)
class LeakageParams:
    """Fit of access-transistor leakage versus cell temperature.

    a_fit may be None in a config; it is then chosen so leakage doubles at
    t_nominal + 15 K.
    """

    a_fit: float | None = None
    eta: float = 2.0
    i_nominal: float = 1e-9        # A per cell at nominal temperature
    t_nominal: float = 298.0       # K


@dataclass(frozen=True)
class CellPosition:
    """0-based crossbar coordinates: row = wordline index, col = bitline index."""

    row: int
    col: int


@dataclass(frozen=True)
class HardwareModel:
    n_tiles: int = 4
    crossbar_dim: int = 128
    pcm: PcmParams = field(default_factory=PcmParams)
    parasitics: ParasiticParams = field(default_factory=ParasiticParams)
    leakage: LeakageParams = field(default_factory=LeakageParams)
    e_spike: float = 50e-12        # J per generated spike
    e_route: float = 147e-12       # J per spike per mesh hop
    v_dd: float = 1.0              # V
    bandwidth: float = 1.8e9       # spike events/s per mesh link
    t_ambient: float = 298.0       # K
    coupling_radius: int = 2       # Chebyshev neighborhood extent
    coupling_distance_unit: float = 1e-6  # m per unit of grid distance
    k_coupling: float | None = None  # None -> normalized at load time
    clusters_per_tile: int = 1
    cell_state_mode: str = "set"   # "set" | "weight-threshold"
    set_state_threshold: float = 0.5
    flip_row_axis: bool = False
    flip_col_axis: bool = False


_FIELD_TYPES: dict[str, Any] = {
    "n_tiles": int,
    "crossbar_dim": int,
    "e_spike": float,
    "e_route": float,
    "v_dd": float,
    "bandwidth": float,
    "t_ambient": float,
    "coupling_radius": int,
    "coupling_distance_unit": float,
    "k_coupling": float,
    "clusters_per_tile": int,
    "cell_state_mode": str,
    "set_state_threshold": float,
    "flip_row_axis": bool,
    "flip_col_axis": bool,
}

_PCM_FIELDS = set(PcmParams.__dataclass_fields__)
_PARASITIC_FIELDS = set(ParasiticParams.__dataclass_fields__)
_LEAKAGE_FIELDS = set(LeakageParams.__dataclass_fields__)


def neighbor_offsets(radius: int) -> list[tuple[int, int]]:
    """All (dr, dc) within Chebyshev distance `radius`, excluding the origin."""
    return [
        (dr, dc)
        for dr in range(-radius, radius + 1)
        for dc in range(-radius, radius + 1)
        if (dr, dc) != (0, 0)
    ]


def full_neighborhood_inverse_distance(radius: int, distance_unit: float) -> float:
    """Sum of 1/D_j over an untruncated neighborhood, D_j in meters.

    This is the worst case over all cells of any grid, so it serves both for
    normalizing k_coupling and for validating user-supplied values.
    """
    return sum(
        1.0 / (math.hypot(dr, dc) * distance_unit)
        for dr, dc in neighbor_offsets(radius)
    )


def resolve_k_coupling(radius: int, distance_unit: float) -> float:
    """k_coupling that makes an interior cell's coupling weights sum to the target."""
    if radius == 0:
        return 0.0
    return INTERIOR_COUPLING_TARGET / full_neighborhood_inverse_distance(radius, distance_unit)


def max_coupling_weight_sum(hw: HardwareModel) -> float:
    if hw.coupling_radius == 0:
        return 0.0
    k = hw.k_coupling if hw.k_coupling is not None else resolve_k_coupling(
        hw.coupling_radius, hw.coupling_distance_unit
    )
    return k * full_neighborhood_inverse_distance(hw.coupling_radius, hw.coupling_distance_unit)


def _positive(name: str, value: float) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise ConfigError(f"{name} must be a positive finite number, got {value!r}")


def _non_negative(name: str, value: float) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value >= 0):
        raise ConfigError(f"{name} must be a non-negative finite number, got {value!r}")


def validate_hardware(hw: HardwareModel) -> None:
    """Check every invariant; raises ConfigError naming the violated one."""
    _positive("n_tiles", hw.n_tiles)
    _positive("crossbar_dim", hw.crossbar_dim)
    _positive("t_ambient", hw.t_ambient)
    _non_negative("e_spike", hw.e_spike)
    _non_negative("e_route", hw.e_route)
    _positive("v_dd", hw.v_dd)
    _positive("bandwidth", hw.bandwidth)
    _non_negative("coupling_radius", hw.coupling_radius)
    _positive("coupling_distance_unit", hw.coupling_distance_unit)
    _positive("clusters_per_tile", hw.clusters_per_tile)
    if hw.clusters_per_tile > hw.crossbar_dim:
        raise ConfigError(
            f"clusters_per_tile ({hw.clusters_per_tile}) exceeds crossbar_dim "
            f"({hw.crossbar_dim}); a cluster needs at least one wordline"
        )
    if hw.cell_state_mode not in ("set", "weight-threshold"):
        raise ConfigError(f"cell_state_mode must be 'set' or 'weight-threshold', got {hw.cell_state_mode!r}")
    _non_negative("set_state_threshold", hw.set_state_threshold)

    p = hw.pcm
    for name in ("r_set", "r_reset", "k", "heat_capacity_c", "volume_v",
                 "thickness_l", "pulse_seconds", "crystallization_temp"):
        _positive(f"pcm.{name}", getattr(p, name))
    if p.r_reset <= p.r_set:
        raise ConfigError(f"pcm.r_reset ({p.r_reset}) must exceed pcm.r_set ({p.r_set})")

    par = hw.parasitics
    _non_negative("parasitics.r_wordline_seg", par.r_wordline_seg)
    _non_negative("parasitics.r_bitline_seg", par.r_bitline_seg)
    _positive("parasitics.i_required", par.i_required)
    if par.v_spike is not None:
        _positive("parasitics.v_spike", par.v_spike)

    lk = hw.leakage
    _positive("leakage.eta", lk.eta)
    _positive("leakage.i_nominal", lk.i_nominal)
    _positive("leakage.t_nominal", lk.t_nominal)
    if lk.a_fit is not None:
        _non_negative("leakage.a_fit", lk.a_fit)

    w_sum = max_coupling_weight_sum(hw)
    if w_sum >= 1.0:
        raise ConfigError(
            f"spatial coupling weights sum to {w_sum:.4g} >= 1 for an interior "
            f"cell; the thermal fixed point is not guaranteed to converge "
            f"(reduce k_coupling, coupling_radius, or increase coupling_distance_unit)"
        )


def _check_unknown(doc: dict, allowed: set[str], context: str) -> None:
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown} in {context}")


def _coerce(name: str, value: Any, typ: type) -> Any:
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name} must be a number, got {value!r}")
        return float(value)
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name} must be an integer, got {value!r}")
        return value
    if typ is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{name} must be a boolean, got {value!r}")
        return value
    if typ is str:
        if not isinstance(value, str):
            raise ConfigError(f"{name} must be a string, got {value!r}")
        return value
    raise AssertionError(name)


def _load_section(doc: dict, section: str, fields: set[str],
                  optional: set[str] = frozenset()) -> dict:
    sub = doc.get(section, {})
    if not isinstance(sub, dict):
        raise ConfigError(f"{section} must be an object, got {sub!r}")
    _check_unknown(sub, fields, f"{section} section")
    out = {}
    for key, value in sub.items():
        if value is None and key in optional:
            out[key] = None
        else:
            out[key] = _coerce(f"{section}.{key}", value, float)
    return out


def load_hardware(source: bytes | str | dict) -> HardwareModel:
    """Parse and validate a hardware config; omitted keys take defaults.

    Unknown keys are an error (catches typos). If v_spike is omitted the model
    is calibrated; if k_coupling is omitted it is normalized so an interior
    cell's coupling weights sum to INTERIOR_COUPLING_TARGET.
    """
    if isinstance(source, (bytes, str)):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"hardware config is not valid JSON: {exc}") from exc
    else:
        doc = source
    if not isinstance(doc, dict):
        raise ConfigError(f"hardware config must be a JSON object, got {type(doc).__name__}")

    _check_unknown(doc, set(_FIELD_TYPES) | {"pcm", "parasitics", "leakage"}, "hardware config")

    kwargs: dict[str, Any] = {}
    for name, typ in _FIELD_TYPES.items():
        if name in doc:
            if name == "k_coupling" and doc[name] is None:
                kwargs[name] = None
            else:
                kwargs[name] = _coerce(name, doc[name], typ)

    pcm_kwargs = _load_section(doc, "pcm", _PCM_FIELDS)
    par_kwargs = _load_section(doc, "parasitics", _PARASITIC_FIELDS, optional={"v_spike"})
    leak_kwargs = _load_section(doc, "leakage", _LEAKAGE_FIELDS, optional={"a_fit"})

    hw = HardwareModel(
        pcm=PcmParams(**pcm_kwargs),
        parasitics=ParasiticParams(**par_kwargs),
        leakage=LeakageParams(**leak_kwargs),
        **kwargs,
    )
    hw = _resolve(hw)
    validate_hardware(hw)
    return hw


def _resolve(hw: HardwareModel) -> HardwareModel:
    """Fill calibrated/normalized fields that were left unset."""
    if hw.k_coupling is None:
        hw = replace(hw, k_coupling=resolve_k_coupling(hw.coupling_radius, hw.coupling_distance_unit))
    if hw.leakage.a_fit is None:
        # leakage doubles at t_nominal + 15 K: 1 + a*15^eta = 2
        a = 1.0 / (15.0 ** hw.leakage.eta)
        hw = replace(hw, leakage=replace(hw.leakage, a_fit=a))
    if hw.parasitics.v_spike is None:
        hw = calibrate_spike_voltage(hw)
    return hw


def default_hardware() -> HardwareModel:
    """The DYNAP-SE-like default model: 4 tiles of 128x128 PCM crossbars."""
    return load_hardware({})


def emit_hardware(hw: HardwareModel) -> str:
    """Serialize with every field explicit, so load(emit(hw)) == hw."""
    doc = {
        "n_tiles": hw.n_tiles,
        "crossbar_dim": hw.crossbar_dim,
        "pcm": {name: getattr(hw.pcm, name) for name in sorted(_PCM_FIELDS)},
        "parasitics": {name: getattr(hw.parasitics, name) for name in sorted(_PARASITIC_FIELDS)},
        "leakage": {name: getattr(hw.leakage, name) for name in sorted(_LEAKAGE_FIELDS)},
        "e_spike": hw.e_spike,
        "e_route": hw.e_route,
        "v_dd": hw.v_dd,
        "bandwidth": hw.bandwidth,
        "t_ambient": hw.t_ambient,
        "coupling_radius": hw.coupling_radius,
        "coupling_distance_unit": hw.coupling_distance_unit,
        "k_coupling": hw.k_coupling,
        "clusters_per_tile": hw.clusters_per_tile,
        "cell_state_mode": hw.cell_state_mode,
        "set_state_threshold": hw.set_state_threshold,
        "flip_row_axis": hw.flip_row_axis,
        "flip_col_axis": hw.flip_col_axis,
    }
    return json.dumps(doc, indent=2) + "\n"


def _check_pos(pos: CellPosition, hw: HardwareModel) -> None:
    n = hw.crossbar_dim
    if not (0 <= pos.row < n and 0 <= pos.col < n):
        raise ValueError(f"cell position {pos} out of range for {n}x{n} crossbar")


def path_resistance(pos: CellPosition, hw: HardwareModel) -> float:
    """Series parasitic resistance of the read path through cell (row, col).

    Convention: wordline drivers at column 0, bitline sensing at the last row;
    flip_row_axis/flip_col_axis mirror it. Non-decreasing in col, non-increasing
    in row (under the default orientation).
    """
    _check_pos(pos, hw)
    n = hw.crossbar_dim
    i = n - 1 - pos.row if hw.flip_row_axis else pos.row
    j = n - 1 - pos.col if hw.flip_col_axis else pos.col
    return (j + 1) * hw.parasitics.r_wordline_seg + (n - i) * hw.parasitics.r_bitline_seg


def max_path_resistance(hw: HardwareModel) -> float:
    n = hw.crossbar_dim
    return n * hw.parasitics.r_wordline_seg + n * hw.parasitics.r_bitline_seg


def pcm_resistance(state: str, hw: HardwareModel) -> float:
    if state == "set":
        return hw.pcm.r_set
    if state == "reset":
        return hw.pcm.r_reset
    raise ValueError(f"unknown cell state {state!r}, expected 'set' or 'reset'")


def cell_read_current(pos: CellPosition, state: str, hw: HardwareModel) -> float:
    """Read current through cell (row, col): v_spike / (R_pcm + R_path)."""
    if hw.parasitics.v_spike is None:
        raise ValueError("hardware model has no spike voltage; calibrate it first")
    return hw.parasitics.v_spike / (pcm_resistance(state, hw) + path_resistance(pos, hw))


def calibrate_spike_voltage(hw: HardwareModel) -> HardwareModel:
    """Size v_spike so the longest (highest-resistance) path meets i_required.

    Idempotent; every shorter path then carries at least i_required.
    """
    v = hw.parasitics.i_required * (hw.pcm.r_set + max_path_resistance(hw))
    return replace(hw, parasitics=replace(hw.parasitics, v_spike=v))


def synapse_state(weight: float, hw: HardwareModel) -> str:
    """Cell state used for read-current/heating purposes.

    Default mode treats every cell as SET (worst case: highest current and
    heat); weight-threshold mode derives it from the weight magnitude.
    """
    if hw.cell_state_mode == "set":
        return "set"
    return "set" if abs(weight) >= hw.set_state_threshold else "reset"
