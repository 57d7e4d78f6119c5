from itertools import product

import numpy as np
import pytest

from thermomap.clustering import (Channel, Cluster, ClusteredWorkload,
                                  assemble_tile)
from thermomap.errors import GuardError, InfeasibleWorkloadError
from thermomap.hardware import load_hardware
from thermomap.mapper import (Mapping, TileEvaluator, baseline_perf_map,
                              calculate_avg_temperature, exhaustive_map,
                              first_fit_assignment, hill_climb,
                              local_optimality_violations, trace_to_csv)
from thermomap.thermal import AccessProfile, average_and_peak, solve_crossbar
from thermomap.workload import Synapse


def make_cluster(idx, rows, cols, count, prefix=None):
    prefix = prefix or f"k{idx}"
    synapses = tuple(
        Synapse(pre=f"{prefix}r{r}", post=f"{prefix}c{c}", weight=1.0, spike_count=count)
        for r in range(rows) for c in range(cols))
    neurons = tuple(sorted({s.pre for s in synapses} | {s.post for s in synapses}))
    return Cluster(id=idx, neurons=neurons, synapses=synapses)


def make_cw(cluster_specs, channels=(), window=1.0):
    clusters = tuple(make_cluster(i, rows, cols, count)
                     for i, (rows, cols, count) in enumerate(cluster_specs))
    chans = tuple(Channel(src=a, dst=b, spike_count=n, cut_synapses=1)
                  for a, b, n in channels)
    total = sum(c.total_spike_count for c in clusters) + sum(c.spike_count for c in chans)
    return ClusteredWorkload(clusters=clusters, channels=chans, window_seconds=window,
                             total_spike_count=total,
                             total_synapse_count=sum(len(c.synapses) for c in clusters)
                             + len(chans))


def mapper_hw(n_tiles=2, cpt=2, dim=16):
    return load_hardware({
        "n_tiles": n_tiles, "crossbar_dim": dim, "clusters_per_tile": cpt,
        "parasitics": {"r_wordline_seg": 150.0, "r_bitline_seg": 150.0,
                       "i_required": 2e-5},
    })


class TestCalculateAvgTemperature:
    def test_zero_spike_workload_is_ambient(self):
        hw = mapper_hw()
        cw = make_cw([(2, 2, 0), (2, 2, 0)])
        got = calculate_avg_temperature(Mapping(assignment=(0, 1)), cw, hw)
        assert got == hw.t_ambient

    def test_one_hot_cluster_rest_empty(self):
        hw = mapper_hw(n_tiles=4, cpt=1)
        cw = make_cw([(3, 3, 300_000)])
        got = calculate_avg_temperature(Mapping(assignment=(2,)), cw, hw)
        assert got > hw.t_ambient

    def test_matches_enumeration_oracle(self):
        # every assignment of 3 clusters onto 2 tiles, scored independently by
        # assembling each tile and solving it directly
        hw = mapper_hw(n_tiles=2, cpt=3)
        cw = make_cw([(2, 2, 250_000), (3, 2, 120_000), (2, 3, 60_000)])
        for assignment in product(range(2), repeat=3):
            per_tile = []
            for tile in range(2):
                members = [cw.clusters[i] for i in range(3) if assignment[i] == tile]
                if not members:
                    per_tile.append(hw.t_ambient)
                    continue
                counts, currents, resistances = assemble_tile(members, hw)
                field = solve_crossbar(
                    AccessProfile(counts=counts, window_seconds=cw.window_seconds),
                    currents, hw, resistances=resistances)
                per_tile.append(average_and_peak(field)[0])
            expected = max(per_tile)
            got = calculate_avg_temperature(Mapping(assignment=assignment), cw, hw)
            assert got == pytest.approx(expected, abs=1e-9)

    def test_infeasible_assignment_rejected(self):
        hw = mapper_hw(n_tiles=2, cpt=1)
        cw = make_cw([(2, 2, 10), (2, 2, 10)])
        with pytest.raises(InfeasibleWorkloadError):
            calculate_avg_temperature(Mapping(assignment=(0, 0)), cw, hw)


class TestHillClimb:
    def test_single_cluster_trivial(self):
        hw = mapper_hw(n_tiles=3, cpt=1)
        cw = make_cw([(3, 3, 200_000)])
        mapping, score, trace = hill_climb(cw, hw, max_iter=3, seed=0)
        solo = calculate_avg_temperature(mapping, cw, hw)
        assert score.max_avg_temp == pytest.approx(solo, abs=1e-12)
        assert len(mapping.assignment) == 1

    def test_returns_local_optimum_and_beats_initials(self):
        hw = mapper_hw(n_tiles=3, cpt=2)
        rng = np.random.default_rng(7)
        for trial in range(8):
            specs = [(int(rng.integers(1, 4)), int(rng.integers(1, 4)),
                      int(rng.integers(0, 300_000))) for _ in range(4)]
            cw = make_cw(specs)
            mapping, score, _ = hill_climb(cw, hw, max_iter=5, seed=trial)
            assert local_optimality_violations(mapping, cw, hw) == []
            ev = TileEvaluator(cw, hw)
            for restart in range(5):
                r = np.random.default_rng(np.random.SeedSequence([trial, 2, restart]))
                from thermomap.mapper import random_assignment
                start = random_assignment(ev, r)
                assert score.max_avg_temp <= ev.max_avg_temperature(start) + 1e-9

    def test_seed_determinism(self):
        hw = mapper_hw(n_tiles=3, cpt=2)
        cw = make_cw([(2, 2, 150_000), (2, 2, 90_000), (1, 3, 250_000)])
        a = hill_climb(cw, hw, max_iter=10, seed=5)
        b = hill_climb(cw, hw, max_iter=10, seed=5)
        assert a[0] == b[0]
        assert a[1].max_avg_temp == b[1].max_avg_temp
        assert [(r.restart, r.sweep, r.best_score) for r in a[2]] == \
            [(r.restart, r.sweep, r.best_score) for r in b[2]]

    def test_thread_count_does_not_change_result(self):
        hw = mapper_hw(n_tiles=3, cpt=2)
        cw = make_cw([(2, 2, 150_000), (2, 2, 90_000), (1, 3, 250_000), (2, 1, 10_000)])
        serial = hill_climb(cw, hw, max_iter=8, seed=3, threads=1)
        threaded = hill_climb(cw, hw, max_iter=8, seed=3, threads=4)
        assert serial[0] == threaded[0]
        assert serial[1].max_avg_temp == threaded[1].max_avg_temp
        assert [(r.restart, r.sweep, r.best_score) for r in serial[2]] == \
            [(r.restart, r.sweep, r.best_score) for r in threaded[2]]

    def test_nested_seed_monotonicity(self):
        hw = mapper_hw(n_tiles=3, cpt=2)
        cw = make_cw([(2, 2, 220_000), (2, 2, 180_000), (2, 2, 120_000),
                      (2, 2, 60_000), (1, 2, 20_000)])
        scores = [hill_climb(cw, hw, max_iter=it, seed=11)[1].max_avg_temp
                  for it in (1, 5, 20)]
        assert scores[2] <= scores[1] <= scores[0]

    def test_matches_exhaustive_on_small_instances(self):
        hw_pool = [mapper_hw(n_tiles=2, cpt=2), mapper_hw(n_tiles=3, cpt=2)]
        rng = np.random.default_rng(99)
        matches = 0
        trials = 20
        for trial in range(trials):
            hw = hw_pool[trial % 2]
            n_clusters = int(rng.integers(2, 5))
            specs = [(int(rng.integers(1, 4)), int(rng.integers(1, 4)),
                      int(rng.integers(0, 400_000))) for _ in range(n_clusters)]
            if n_clusters > hw.n_tiles * hw.clusters_per_tile:
                continue
            cw = make_cw(specs)
            mapping, score, _ = hill_climb(cw, hw, max_iter=50, seed=trial)
            _, best = exhaustive_map(cw, hw)
            assert score.max_avg_temp >= best.max_avg_temp - 1e-9
            if abs(score.max_avg_temp - best.max_avg_temp) <= 1e-9:
                matches += 1
            assert local_optimality_violations(mapping, cw, hw) == []
        assert matches >= trials - 1


class TestExhaustive:
    def test_single_cluster_lexicographic_tie(self):
        hw = mapper_hw(n_tiles=3, cpt=1)
        cw = make_cw([(2, 2, 100_000)])
        mapping, _ = exhaustive_map(cw, hw)
        assert mapping.assignment == (0,)

    def test_two_identical_clusters_separate(self):
        hw = mapper_hw(n_tiles=2, cpt=2)
        cw = make_cw([(3, 3, 200_000), (3, 3, 200_000)])
        mapping, best = exhaustive_map(cw, hw)
        assert mapping.assignment in {(0, 1), (1, 0)}
        ev = TileEvaluator(cw, hw)
        colocated = ev.max_avg_temperature((0, 0))
        assert best.max_avg_temp < colocated

    def test_guard_rejects_large_instances(self):
        hw = mapper_hw(n_tiles=4, cpt=4)
        cw = make_cw([(1, 1, 1)] * 10)  # 4^10 > 10^6
        with pytest.raises(GuardError):
            exhaustive_map(cw, hw)

    def test_objective_invariant_under_count_scaling(self):
        # duty-linear regime: scaling every count by 5 keeps duty < 1 and must
        # not change the argmin assignment
        hw = mapper_hw(n_tiles=2, cpt=2)
        base = [(2, 2, 40_000), (2, 3, 15_000), (3, 2, 70_000)]
        scaled = [(r, c, 5 * n) for r, c, n in base]
        m1, _ = exhaustive_map(make_cw(base), hw)
        m2, _ = exhaustive_map(make_cw(scaled), hw)
        assert m1 == m2


class TestBaseline:
    def test_heavy_channel_forces_colocation(self):
        hw = mapper_hw(n_tiles=2, cpt=2)
        cw = make_cw([(2, 2, 1000), (2, 2, 1000)], channels=[(0, 1, 10 ** 6)])
        mapping, score, _ = baseline_perf_map(cw, hw, max_iter=5, seed=0)
        assert mapping.assignment[0] == mapping.assignment[1]
        assert score.comm_cost == 0.0

    def test_zero_traffic_returns_lexicographic_assignment(self):
        hw = mapper_hw(n_tiles=3, cpt=2)
        cw = make_cw([(2, 2, 50_000), (2, 2, 10_000), (2, 2, 90_000)])
        mapping, score, _ = baseline_perf_map(cw, hw, max_iter=10, seed=4)
        ev = TileEvaluator(cw, hw)
        assert mapping.assignment == first_fit_assignment(ev)
        assert score.comm_cost == 0.0

    def test_thermally_skewed_direction(self):
        # two hot clusters tied by heavy traffic: the baseline packs them onto
        # one crossbar, the thermal mapper pays hops to split them
        hw = mapper_hw(n_tiles=2, cpt=2)
        cw = make_cw([(4, 4, 350_000), (4, 4, 350_000), (2, 2, 1_000), (2, 2, 1_000)],
                     channels=[(0, 1, 500_000), (2, 3, 400)])
        t_map, t_score, _ = hill_climb(cw, hw, max_iter=10, seed=1)
        b_map, b_score, _ = baseline_perf_map(cw, hw, max_iter=10, seed=1)
        assert b_score.comm_cost <= t_score.comm_cost
        assert t_score.max_avg_temp < b_score.max_avg_temp


class TestScoringCache:
    def test_cached_scores_bit_identical_to_fresh(self):
        hw = mapper_hw(n_tiles=3, cpt=2)
        cw = make_cw([(2, 2, 150_000), (3, 2, 90_000), (2, 3, 250_000)])
        warm = TileEvaluator(cw, hw)
        assignments = [a for a in product(range(3), repeat=3) if warm.is_feasible(a)]
        for a in assignments:  # fill the cache in one order
            warm.max_avg_temperature(a)
        for a in reversed(assignments):
            fresh = TileEvaluator(cw, hw)
            assert warm.max_avg_temperature(a) == fresh.max_avg_temperature(a)

    def test_score_reproducible(self):
        hw = mapper_hw(n_tiles=2, cpt=2)
        cw = make_cw([(2, 2, 99_000), (2, 2, 1_000)])
        s1 = TileEvaluator(cw, hw).score((0, 1))
        s2 = TileEvaluator(cw, hw).score((0, 1))
        assert s1.max_avg_temp == s2.max_avg_temp
        assert s1.comm_cost == s2.comm_cost
        assert s1.report.total_energy_j == s2.report.total_energy_j


def test_trace_csv_headers():
    from thermomap.mapper import TraceRow
    rows = [TraceRow(restart=-1, sweep=1, best_score=300.5, elapsed_ms=1.25)]
    assert trace_to_csv(rows).splitlines()[0] == "restart,sweep,best_temp_K,elapsed_ms"
    assert trace_to_csv(rows, "comm").splitlines()[0] == \
        "restart,sweep,best_comm_cost,elapsed_ms"
