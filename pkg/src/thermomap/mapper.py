"""Cluster-to-tile placement.

The thermal mapper is a random-restart hill climber: each restart draws a
random feasible allocation and then repeatedly sweeps every (cluster, tile)
single-cluster move, applying the best strictly-improving one, until a full
pass makes no progress. The objective is the maximum over tiles of the mean
crossbar temperature. A deterministic first-fit assignment is refined the same
way and seeds the incumbent, so the returned mapping always carries a
local-optimality certificate, and ties resolve to the lexicographic assignment.

The performance baseline runs the identical search skeleton but minimizes
communication cost (spike count times mesh hops). An exhaustive enumerator
provides the global optimum on small instances for oracle testing.

Tile scores are cached by tile contents (the set of co-located clusters), so
moving one cluster only ever re-solves the source and destination tiles, and
identical tile contents are never solved twice.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product

import numpy as np

from .clustering import ClusteredWorkload, assemble_tile
from .errors import GuardError, InfeasibleWorkloadError, NonConvergenceError
from .hardware import HardwareModel
from .power import EnergyReport, build_energy_report, hops
from .thermal import (DEFAULT_MAX_SWEEPS, DEFAULT_TOL, AccessProfile,
                      ThermalField, ambient_field, average_and_peak,
                      solve_crossbar)

log = logging.getLogger(__name__)

EXHAUSTIVE_GUARD = 10 ** 6

OBJECTIVE_THERMAL = "thermal"
OBJECTIVE_COMM = "comm"


@dataclass(frozen=True)
class Mapping:
    """Dense cluster -> tile assignment."""

    assignment: tuple[int, ...]


@dataclass(frozen=True)
class MappingScore:
    max_avg_temp: float
    comm_cost: float
    report: EnergyReport


@dataclass(frozen=True)
class TraceRow:
    restart: int
    sweep: int
    best_score: float
    elapsed_ms: float


class TileEvaluator:
    """Scores mappings at tile granularity with content-keyed thermal caching."""

    def __init__(self, cw: ClusteredWorkload, hw: HardwareModel,
                 tol: float = DEFAULT_TOL, max_sweeps: int = DEFAULT_MAX_SWEEPS,
                 naive_placement: bool = False):
        self.cw = cw
        self.hw = hw
        self.tol = tol
        self.max_sweeps = max_sweeps
        self.naive = naive_placement
        self._cluster_rows = [c.rows_used for c in cw.clusters]
        self._cache: dict[tuple[int, ...], tuple[float, ThermalField]] = {}

    def is_feasible(self, assignment: tuple[int, ...]) -> bool:
        counts = [0] * self.hw.n_tiles
        rows = [0] * self.hw.n_tiles
        for cl, tile in enumerate(assignment):
            if not 0 <= tile < self.hw.n_tiles:
                return False
            counts[tile] += 1
            rows[tile] += self._cluster_rows[cl]
        return all(c <= self.hw.clusters_per_tile for c in counts) and \
            all(r <= self.hw.crossbar_dim for r in rows)

    def check_feasible(self, assignment: tuple[int, ...]) -> None:
        if len(assignment) != len(self.cw.clusters):
            raise InfeasibleWorkloadError(
                f"mapping covers {len(assignment)} clusters, workload has "
                f"{len(self.cw.clusters)}")
        if not self.is_feasible(assignment):
            raise InfeasibleWorkloadError(
                f"assignment {assignment} violates tile capacity "
                f"({self.hw.clusters_per_tile} cluster(s), {self.hw.crossbar_dim} rows per tile)")

    def tile_contents(self, assignment: tuple[int, ...]) -> list[tuple[int, ...]]:
        tiles: list[list[int]] = [[] for _ in range(self.hw.n_tiles)]
        for cl, tile in enumerate(assignment):
            tiles[tile].append(cl)
        return [tuple(t) for t in tiles]

    def solve_tile(self, contents: tuple[int, ...]) -> tuple[float, ThermalField]:
        """Average temperature and field for a tile holding these clusters."""
        cached = self._cache.get(contents)
        if cached is not None:
            return cached
        if not contents:
            field = ambient_field(self.hw)
            result = (self.hw.t_ambient, field)
        else:
            clusters = [self.cw.clusters[i] for i in contents]
            counts, currents, resistances = assemble_tile(clusters, self.hw, self.naive)
            profile = AccessProfile(counts=counts, window_seconds=self.cw.window_seconds)
            field = solve_crossbar(profile, currents, self.hw, tol=self.tol,
                                   max_sweeps=self.max_sweeps, resistances=resistances)
            if not field.converged:
                raise NonConvergenceError(
                    f"thermal solve for tile contents {contents} did not converge "
                    f"within {self.max_sweeps} sweeps")
            avg, _peak = average_and_peak(field)
            result = (avg, field)
        self._cache[contents] = result
        return result

    def max_avg_temperature(self, assignment: tuple[int, ...]) -> float:
        """Algorithm objective: max over tiles of the mean crossbar temperature."""
        return max(self.solve_tile(contents)[0]
                   for contents in self.tile_contents(assignment))

    def comm_cost(self, assignment: tuple[int, ...]) -> float:
        return float(sum(
            ch.spike_count * hops(assignment[ch.src], assignment[ch.dst], self.hw)
            for ch in self.cw.channels))

    def objective(self, name: str):
        if name == OBJECTIVE_THERMAL:
            return self.max_avg_temperature
        if name == OBJECTIVE_COMM:
            return self.comm_cost
        raise ValueError(f"unknown objective {name!r}")

    def fields(self, assignment: tuple[int, ...]) -> list[ThermalField]:
        return [self.solve_tile(contents)[1]
                for contents in self.tile_contents(assignment)]

    def score(self, assignment: tuple[int, ...]) -> MappingScore:
        """Full reproducible score (thermal objective, comm cost, energy report)."""
        self.check_feasible(assignment)
        mapping = Mapping(assignment=assignment)
        report = build_energy_report(self.cw, mapping, self.fields(assignment), self.hw)
        return MappingScore(max_avg_temp=self.max_avg_temperature(assignment),
                            comm_cost=self.comm_cost(assignment), report=report)


def calculate_avg_temperature(m: Mapping, cw: ClusteredWorkload, hw: HardwareModel,
                              tol: float = DEFAULT_TOL,
                              max_sweeps: int = DEFAULT_MAX_SWEEPS,
                              naive_placement: bool = False) -> float:
    """Max over tiles of the average crossbar temperature under mapping m.

    Empty tiles contribute ambient.
    """
    ev = TileEvaluator(cw, hw, tol=tol, max_sweeps=max_sweeps,
                       naive_placement=naive_placement)
    ev.check_feasible(m.assignment)
    return ev.max_avg_temperature(m.assignment)


def first_fit_assignment(ev: TileEvaluator) -> tuple[int, ...]:
    """Lexicographically smallest feasible assignment (greedy first fit)."""
    hw = ev.hw
    counts = [0] * hw.n_tiles
    rows = [0] * hw.n_tiles
    out = []
    for cl, c in enumerate(ev.cw.clusters):
        placed = False
        for tile in range(hw.n_tiles):
            if counts[tile] < hw.clusters_per_tile and \
                    rows[tile] + c.rows_used <= hw.crossbar_dim:
                counts[tile] += 1
                rows[tile] += c.rows_used
                out.append(tile)
                placed = True
                break
        if not placed:
            raise InfeasibleWorkloadError(
                f"cluster {cl} cannot be placed: {len(ev.cw.clusters)} clusters do "
                f"not fit {hw.n_tiles} tile(s) at {hw.clusters_per_tile} cluster(s) "
                f"and {hw.crossbar_dim} rows per tile")
    return tuple(out)


def random_assignment(ev: TileEvaluator, rng: np.random.Generator) -> tuple[int, ...]:
    """Uniform random feasible allocation; falls back to first fit if boxed in."""
    hw = ev.hw
    for _ in range(100):
        counts = [0] * hw.n_tiles
        rows = [0] * hw.n_tiles
        out = []
        ok = True
        for c in ev.cw.clusters:
            options = [t for t in range(hw.n_tiles)
                       if counts[t] < hw.clusters_per_tile
                       and rows[t] + c.rows_used <= hw.crossbar_dim]
            if not options:
                ok = False
                break
            tile = options[int(rng.integers(len(options)))]
            counts[tile] += 1
            rows[tile] += c.rows_used
            out.append(tile)
        if ok:
            return tuple(out)
    return first_fit_assignment(ev)


def _descent(ev: TileEvaluator, objective, start: tuple[int, ...]):
    """Greedy single-cluster-move descent. Returns (assignment, score, sweep scores)."""
    current = list(start)
    cur_score = objective(tuple(current))
    sweep_scores = []
    n_clusters = len(current)
    improved = True
    while improved:
        improved = False
        for cl in range(n_clusters):
            home = current[cl]
            best_score, best_tile = cur_score, None
            for tile in range(ev.hw.n_tiles):
                if tile == home:
                    continue
                current[cl] = tile
                candidate = tuple(current)
                current[cl] = home
                if not ev.is_feasible(candidate):
                    continue
                try:
                    score = objective(candidate)
                except NonConvergenceError as exc:
                    log.warning("move of cluster %d to tile %d rejected: %s", cl, tile, exc)
                    continue
                if score < best_score:
                    best_score, best_tile = score, tile
            if best_tile is not None:
                current[cl] = best_tile
                cur_score = best_score
                improved = True
        sweep_scores.append(cur_score)
    return tuple(current), cur_score, sweep_scores


def _search(cw: ClusteredWorkload, hw: HardwareModel, max_iter: int, seed: int,
            objective_name: str, tol: float, max_sweeps: int,
            naive_placement: bool, threads: int) -> tuple[Mapping, MappingScore, list[TraceRow]]:
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    ev = TileEvaluator(cw, hw, tol=tol, max_sweeps=max_sweeps,
                       naive_placement=naive_placement)
    objective = ev.objective(objective_name)
    t0 = time.perf_counter()

    # Deterministic seed: keeps ties lexicographic and certifies local optimality
    # even when no random restart strictly improves on it.
    best_assign, best_score = None, None
    trace: list[TraceRow] = []
    try:
        best_assign, best_score, seed_sweeps = _descent(ev, objective, first_fit_assignment(ev))
        trace = [TraceRow(restart=-1, sweep=i + 1, best_score=s,
                          elapsed_ms=(time.perf_counter() - t0) * 1e3)
                 for i, s in enumerate(seed_sweeps)]
    except NonConvergenceError as exc:
        log.warning("first-fit seed descent abandoned: %s", exc)

    def run_restart(restart: int):
        rng = np.random.default_rng(np.random.SeedSequence([seed, 2, restart]))
        start = random_assignment(ev, rng)
        try:
            return _descent(ev, objective, start)
        except NonConvergenceError as exc:
            log.warning("restart %d abandoned: %s", restart, exc)
            return None

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_restart, range(max_iter)))
    else:
        results = [run_restart(r) for r in range(max_iter)]

    # Reduce in restart order so the outcome is independent of thread count.
    for restart, result in enumerate(results):
        if result is None:
            continue
        assign, score, sweeps = result
        for i, s in enumerate(sweeps):
            incumbent = s if best_score is None else min(best_score, s)
            trace.append(TraceRow(restart=restart, sweep=i + 1, best_score=incumbent,
                                  elapsed_ms=(time.perf_counter() - t0) * 1e3))
        if best_score is None or score < best_score:
            best_assign, best_score = assign, score

    if best_assign is None:
        raise NonConvergenceError(
            "every candidate mapping failed the thermal solve; increase "
            "max_sweeps or loosen the tolerance")
    mapping = Mapping(assignment=best_assign)
    return mapping, ev.score(best_assign), trace


def hill_climb(cw: ClusteredWorkload, hw: HardwareModel, max_iter: int = 100,
               seed: int = 0, tol: float = DEFAULT_TOL,
               max_sweeps: int = DEFAULT_MAX_SWEEPS, naive_placement: bool = False,
               threads: int = 1) -> tuple[Mapping, MappingScore, list[TraceRow]]:
    """Thermal hill climbing: minimize the max average crossbar temperature."""
    return _search(cw, hw, max_iter, seed, OBJECTIVE_THERMAL, tol, max_sweeps,
                   naive_placement, threads)


def baseline_perf_map(cw: ClusteredWorkload, hw: HardwareModel, max_iter: int = 100,
                      seed: int = 0, tol: float = DEFAULT_TOL,
                      max_sweeps: int = DEFAULT_MAX_SWEEPS,
                      naive_placement: bool = False,
                      threads: int = 1) -> tuple[Mapping, MappingScore, list[TraceRow]]:
    """Performance-oriented baseline: minimize spike-hop communication cost."""
    return _search(cw, hw, max_iter, seed, OBJECTIVE_COMM, tol, max_sweeps,
                   naive_placement, threads)


def exhaustive_map(cw: ClusteredWorkload, hw: HardwareModel,
                   tol: float = DEFAULT_TOL, max_sweeps: int = DEFAULT_MAX_SWEEPS,
                   naive_placement: bool = False) -> tuple[Mapping, MappingScore]:
    """Global optimum of the thermal objective by full enumeration.

    Guarded: |tiles| ** |clusters| must not exceed 10^6. Ties resolve to the
    lexicographically smallest assignment.
    """
    n_assignments = hw.n_tiles ** len(cw.clusters)
    if n_assignments > EXHAUSTIVE_GUARD:
        raise GuardError(
            f"exhaustive search over {hw.n_tiles}^{len(cw.clusters)} = "
            f"{n_assignments} assignments exceeds the {EXHAUSTIVE_GUARD} guard")
    ev = TileEvaluator(cw, hw, tol=tol, max_sweeps=max_sweeps,
                       naive_placement=naive_placement)
    best_assign, best_score = None, None
    for assignment in product(range(hw.n_tiles), repeat=len(cw.clusters)):
        if not ev.is_feasible(assignment):
            continue
        score = ev.max_avg_temperature(assignment)
        if best_score is None or score < best_score:
            best_assign, best_score = assignment, score
    if best_assign is None:
        raise InfeasibleWorkloadError(
            f"no feasible assignment of {len(cw.clusters)} clusters onto "
            f"{hw.n_tiles} tile(s)")
    return Mapping(assignment=best_assign), ev.score(best_assign)


def local_optimality_violations(m: Mapping, cw: ClusteredWorkload, hw: HardwareModel,
                                objective_name: str = OBJECTIVE_THERMAL,
                                tol: float = DEFAULT_TOL,
                                max_sweeps: int = DEFAULT_MAX_SWEEPS,
                                naive_placement: bool = False) -> list[tuple[int, int]]:
    """(cluster, tile) moves that would strictly improve the objective; empty
    for a certified local optimum."""
    ev = TileEvaluator(cw, hw, tol=tol, max_sweeps=max_sweeps,
                       naive_placement=naive_placement)
    objective = ev.objective(objective_name)
    base = objective(m.assignment)
    violations = []
    for cl in range(len(m.assignment)):
        for tile in range(hw.n_tiles):
            if tile == m.assignment[cl]:
                continue
            candidate = m.assignment[:cl] + (tile,) + m.assignment[cl + 1:]
            if ev.is_feasible(candidate) and objective(candidate) < base:
                violations.append((cl, tile))
    return violations


def trace_to_csv(trace: list[TraceRow], objective_name: str = OBJECTIVE_THERMAL) -> str:
    """Search trace as CSV for compile-time/quality studies."""
    column = "best_temp_K" if objective_name == OBJECTIVE_THERMAL else "best_comm_cost"
    lines = [f"restart,sweep,{column},elapsed_ms"]
    lines.extend(f"{row.restart},{row.sweep},{row.best_score:.6f},{row.elapsed_ms:.3f}"
                 for row in trace)
    return "\n".join(lines) + "\n"
