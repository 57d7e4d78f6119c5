"""Steady-state thermal model of one crossbar under a spike workload.

Each cell's temperature follows the single-cell energy balance (Joule heating
minus conduction through the chalcogenide thickness), evaluated at the end of
one read pulse with the average power scaled by the cell's access duty cycle:

    T = T_surrounding + duty * I^2 * R * l^2 / (k * V) * (1 - exp(-k*t/(l^2*C)))

The surrounding temperature couples a cell to its neighbors through
inverse-distance weights on the excess over ambient. The two relations are
solved simultaneously by Gauss-Seidel sweeps in row-major cell order; because
the per-cell map is affine with non-negative weights summing below 1, the
iteration is a contraction with a unique fixed point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import NonConvergenceError
from .hardware import CellPosition, HardwareModel, PcmParams, neighbor_offsets

DEFAULT_TOL = 1e-3
DEFAULT_MAX_SWEEPS = 1000


@dataclass(frozen=True, eq=False)
class AccessProfile:
    """Per-cell access counts for one crossbar over one simulation window."""

    counts: np.ndarray          # (n, n) non-negative ints
    window_seconds: float

    def __post_init__(self) -> None:
        if self.counts.ndim != 2 or self.counts.shape[0] != self.counts.shape[1]:
            raise ValueError(f"access counts must be square, got shape {self.counts.shape}")
        if self.window_seconds <= 0:
            raise ValueError(f"window_seconds must be positive, got {self.window_seconds}")
        if np.any(self.counts < 0):
            raise ValueError("access counts must be non-negative")


@dataclass(frozen=True, eq=False)
class ThermalField:
    """Converged (or abandoned) per-cell temperature grid, in Kelvin."""

    temperature: np.ndarray
    converged: bool
    sweeps: int
    t_ambient: float
    sweep_deltas: tuple[float, ...] = ()


def saturation_bracket(pcm: PcmParams) -> float:
    """1 - exp(-k*t_pulse/(l^2*C)): fraction of the steady rise reached per pulse."""
    tau = pcm.thickness_l ** 2 * pcm.heat_capacity_c / pcm.k
    return 1.0 - math.exp(-pcm.pulse_seconds / tau)


def cell_temperature(i_pcm: float, r_pcm: float, duty: float,
                     t_surrounding: float, pcm: PcmParams) -> float:
    """Closed-form cell temperature after one read pulse at the given duty cycle."""
    for name, value in (("i_pcm", i_pcm), ("r_pcm", r_pcm), ("duty", duty),
                        ("t_surrounding", t_surrounding)):
        if not math.isfinite(value):
            raise ValueError(f"{name} must be finite, got {value!r}")
    if not 0.0 <= duty <= 1.0:
        raise ValueError(f"duty must be in [0, 1], got {duty}")
    if t_surrounding < 0:
        raise ValueError(f"t_surrounding must be >= 0, got {t_surrounding}")
    rise = (duty * i_pcm ** 2 * r_pcm * pcm.thickness_l ** 2
            / (pcm.k * pcm.volume_v)) * saturation_bracket(pcm)
    return t_surrounding + rise


def duty_cycle(counts: np.ndarray, window_seconds: float, pcm: PcmParams) -> np.ndarray:
    """Fraction of the window each cell carries read current, clamped to 1."""
    return np.minimum(counts * (pcm.pulse_seconds / window_seconds), 1.0)


def coupling_weight(dr: int, dc: int, hw: HardwareModel) -> float:
    """Weight of a neighbor at grid offset (dr, dc): k_coupling / (distance * unit)."""
    return hw.k_coupling / (math.hypot(dr, dc) * hw.coupling_distance_unit)


def surrounding_temperature(pos: CellPosition, field: ThermalField,
                            hw: HardwareModel, radius: int | None = None) -> float:
    """Ambient plus inverse-distance-weighted excess of the neighboring cells."""
    n = hw.crossbar_dim
    if not (0 <= pos.row < n and 0 <= pos.col < n):
        raise ValueError(f"cell position {pos} out of range for {n}x{n} crossbar")
    radius = hw.coupling_radius if radius is None else radius
    t_amb = hw.t_ambient
    total = 0.0
    for dr, dc in neighbor_offsets(radius):
        r, c = pos.row + dr, pos.col + dc
        if 0 <= r < n and 0 <= c < n:
            total += coupling_weight(dr, dc, hw) * (field.temperature[r, c] - t_amb)
    return t_amb + total


@lru_cache(maxsize=32)
def _coupling_operators(n: int, radius: int, k_coupling: float, distance_unit: float):
    """(forward-substitution solver for I - L, U) of the coupling matrix W = L + U,
    flattened in row-major cell order.

    One Gauss-Seidel sweep over x = zeta + W x in row-major cell order is
    exactly the triangular solve (I - L) x_new = zeta + U x_old; the lower
    factor is constant per hardware model, so it is factorized once.
    """
    offsets = neighbor_offsets(radius)
    rows_idx, cols_idx, vals = [], [], []
    for r in range(n):
        for c in range(n):
            cell = r * n + c
            for dr, dc in offsets:
                rr, cc = r + dr, c + dc
                if 0 <= rr < n and 0 <= cc < n:
                    w = k_coupling / (math.hypot(dr, dc) * distance_unit)
                    rows_idx.append(cell)
                    cols_idx.append(rr * n + cc)
                    vals.append(w)
    w_mat = sp.csr_matrix((vals, (rows_idx, cols_idx)), shape=(n * n, n * n))
    lower = sp.tril(w_mat, k=-1, format="csr")
    upper = sp.triu(w_mat, k=1, format="csr")
    i_minus_l = (sp.identity(n * n, format="csc") - lower).tocsc()
    # NATURAL keeps the triangular structure: the LU solve is plain forward substitution.
    lu = splu(i_minus_l, permc_spec="NATURAL", options={"SymmetricMode": False})
    return lu.solve, upper


def heating_rise_grid(profile: AccessProfile, currents: np.ndarray,
                      resistances: np.ndarray, hw: HardwareModel) -> np.ndarray:
    """Per-cell isolated temperature rise (the zeta term of the fixed point)."""
    pcm = hw.pcm
    duty = duty_cycle(profile.counts.astype(float), profile.window_seconds, pcm)
    factor = pcm.thickness_l ** 2 / (pcm.k * pcm.volume_v) * saturation_bracket(pcm)
    return duty * currents ** 2 * resistances * factor


def solve_crossbar(profile: AccessProfile, currents: np.ndarray, hw: HardwareModel,
                   tol: float = DEFAULT_TOL, max_sweeps: int = DEFAULT_MAX_SWEEPS,
                   resistances: np.ndarray | None = None,
                   coupling_radius: int | None = None) -> ThermalField:
    """Gauss-Seidel fixed-point solve of the coupled cell-temperature equations.

    Sweeps update every cell in row-major order until the max per-cell change
    drops below tol; a field that ran out of sweeps is returned with
    converged=False. coupling_radius=0 gives the neighbor-blind solve.
    """
    n = hw.crossbar_dim
    if profile.counts.shape != (n, n) or currents.shape != (n, n):
        raise ValueError(
            f"profile/current grids must be {n}x{n}, got {profile.counts.shape} and {currents.shape}")
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if max_sweeps < 1:
        raise ValueError(f"max_sweeps must be >= 1, got {max_sweeps}")
    if resistances is None:
        resistances = np.full((n, n), hw.pcm.r_set)
    radius = hw.coupling_radius if coupling_radius is None else coupling_radius

    zeta = heating_rise_grid(profile, currents, resistances, hw).reshape(-1)
    x = np.zeros(n * n)
    deltas: list[float] = []
    converged = False
    sweeps = 0
    if radius > 0:
        solve_lower, upper = _coupling_operators(n, radius, hw.k_coupling,
                                                 hw.coupling_distance_unit)
    for _ in range(max_sweeps):
        sweeps += 1
        if radius > 0:
            x_new = solve_lower(zeta + upper @ x)
        else:
            x_new = zeta.copy()
        delta = float(np.max(np.abs(x_new - x))) if x.size else 0.0
        deltas.append(delta)
        x = x_new
        if delta < tol:
            converged = True
            break

    return ThermalField(temperature=hw.t_ambient + x.reshape(n, n),
                        converged=converged, sweeps=sweeps, t_ambient=hw.t_ambient,
                        sweep_deltas=tuple(deltas))


def fixed_point_residual(field: ThermalField, profile: AccessProfile,
                         currents: np.ndarray, hw: HardwareModel,
                         resistances: np.ndarray | None = None,
                         coupling_radius: int | None = None) -> float:
    """Max |T - cell_temperature(..., surrounding_temperature(...))| over cells.

    Evaluates the two public per-cell operations directly, independent of the
    solver's sparse sweep machinery.
    """
    n = hw.crossbar_dim
    if resistances is None:
        resistances = np.full((n, n), hw.pcm.r_set)
    duty = duty_cycle(profile.counts.astype(float), profile.window_seconds, hw.pcm)
    worst = 0.0
    for r in range(n):
        for c in range(n):
            pos = CellPosition(r, c)
            t_surr = surrounding_temperature(pos, field, hw, radius=coupling_radius)
            t_expected = cell_temperature(currents[r, c], resistances[r, c],
                                          float(duty[r, c]), t_surr, hw.pcm)
            worst = max(worst, abs(field.temperature[r, c] - t_expected))
    return worst


def average_and_peak(field: ThermalField) -> tuple[float, float]:
    """Arithmetic mean and maximum cell temperature of a converged field."""
    if not field.converged:
        raise NonConvergenceError(
            f"thermal field did not converge within {field.sweeps} sweeps; "
            f"statistics over an unconverged field are not meaningful")
    return float(np.mean(field.temperature)), float(np.max(field.temperature))


def ambient_field(hw: HardwareModel) -> ThermalField:
    """The exact field of an idle crossbar: every cell at ambient."""
    n = hw.crossbar_dim
    return ThermalField(temperature=np.full((n, n), hw.t_ambient), converged=True,
                        sweeps=1, t_ambient=hw.t_ambient, sweep_deltas=(0.0,))


def emit_thermal_csv(field: ThermalField) -> str:
    """Grid as CSV, one crossbar row per line, Kelvin with 3 decimals."""
    lines = [",".join(f"{t:.3f}" for t in row) for row in field.temperature]
    return "\n".join(lines) + "\n"
