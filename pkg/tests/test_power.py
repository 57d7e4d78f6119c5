import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermomap.clustering import Channel, Cluster, ClusteredWorkload
from thermomap.errors import NonConvergenceError
from thermomap.hardware import LeakageParams, load_hardware, default_hardware
from thermomap.mapper import Mapping
from thermomap.power import (build_energy_report, format_report_text, hops,
                             leakage_current, mesh_shape, route_links,
                             tile_leakage_power, traffic_energy_and_latency)
from thermomap.thermal import AccessProfile, ThermalField, ambient_field, solve_crossbar

PARAMS = LeakageParams(a_fit=1.0 / 225.0, eta=2.0, i_nominal=1e-9, t_nominal=298.0)


class TestLeakageCurrent:
    def test_floor_at_nominal(self):
        assert leakage_current(298.0, PARAMS) == PARAMS.i_nominal
        assert leakage_current(250.0, PARAMS) == PARAMS.i_nominal

    def test_three_kelvin_excess_example(self):
        # eta=2 with A*i_nominal = 1 uA/K^2: 3 K excess adds 9 uA above the floor
        p = LeakageParams(a_fit=1.0, eta=2.0, i_nominal=1e-6, t_nominal=298.0)
        above_floor = leakage_current(301.0, p) - p.i_nominal
        assert above_floor == pytest.approx(9e-6, rel=1e-12)

    def test_continuous_at_nominal(self):
        eps = 1e-9
        assert leakage_current(298.0 + eps, PARAMS) == pytest.approx(PARAMS.i_nominal, rel=1e-9)

    @settings(max_examples=50, deadline=None)
    @given(t1=st.floats(200, 400), t2=st.floats(200, 400),
           eta=st.floats(1.0, 4.0), a=st.floats(1e-4, 1.0))
    def test_monotone_for_any_valid_params(self, t1, t2, eta, a):
        p = LeakageParams(a_fit=a, eta=eta, i_nominal=1e-9, t_nominal=298.0)
        lo, hi = sorted((t1, t2))
        assert leakage_current(lo, p) <= leakage_current(hi, p)

    def test_doubles_at_plus_15k_with_defaults(self):
        hw = default_hardware()
        assert leakage_current(hw.leakage.t_nominal + 15.0, hw.leakage) == \
            pytest.approx(2 * hw.leakage.i_nominal, rel=1e-12)


class TestTileLeakagePower:
    def test_floor_everywhere_at_ambient(self):
        hw = load_hardware({"crossbar_dim": 16})
        power = tile_leakage_power(ambient_field(hw), hw)
        assert power == pytest.approx(16 * 16 * hw.leakage.i_nominal * hw.v_dd, rel=1e-12)

    def test_pointwise_dominance(self, rng):
        hw = load_hardware({"crossbar_dim": 8})
        base = 298.0 + rng.random((8, 8)) * 20
        lower = ThermalField(temperature=base, converged=True, sweeps=1, t_ambient=298.0)
        higher = ThermalField(temperature=base + 5.0, converged=True, sweeps=1,
                              t_ambient=298.0)
        assert tile_leakage_power(higher, hw) >= tile_leakage_power(lower, hw)

    def test_unconverged_rejected(self):
        hw = load_hardware({"crossbar_dim": 8})
        field = ThermalField(temperature=np.full((8, 8), 300.0), converged=False,
                             sweeps=5, t_ambient=298.0)
        with pytest.raises(NonConvergenceError):
            tile_leakage_power(field, hw)

    def test_short_path_concentration_leaks_more(self, desk_hw):
        # same access counts, placed once on the lowest-resistance (hottest)
        # cells and once on the highest-resistance cells
        from thermomap.hardware import CellPosition, cell_read_current, path_resistance
        n = desk_hw.crossbar_dim
        cells = [(i, j) for i in range(n) for j in range(n)]
        by_path = sorted(cells, key=lambda ij: path_resistance(CellPosition(*ij), desk_hw))
        counts_value = 300_000
        currents = np.zeros((n, n))
        for i, j in cells:
            currents[i, j] = cell_read_current(CellPosition(i, j), "set", desk_hw)

        def leakage_for(chosen):
            counts = np.zeros((n, n), dtype=int)
            for i, j in chosen:
                counts[i, j] = counts_value
            field = solve_crossbar(AccessProfile(counts=counts, window_seconds=1.0),
                                   currents, desk_hw)
            return tile_leakage_power(field, desk_hw)

        hot = leakage_for(by_path[:64])    # shortest paths: highest current
        cold = leakage_for(by_path[-64:])  # longest paths: lowest current
        assert hot > cold


def two_cluster_workload(channel_spikes, total_spikes=1000, cut_synapses=1):
    clusters = (
        Cluster(id=0, neurons=("a",), synapses=()),
        Cluster(id=1, neurons=("b",), synapses=()),
    )
    channels = (Channel(src=0, dst=1, spike_count=channel_spikes,
                        cut_synapses=cut_synapses),) if channel_spikes else ()
    return ClusteredWorkload(clusters=clusters, channels=channels,
                             window_seconds=1.0, total_spike_count=total_spikes,
                             total_synapse_count=cut_synapses)


class TestTrafficEnergyAndLatency:
    def test_single_cluster_1000_spikes_is_50nj(self):
        hw = default_hardware()
        cw = ClusteredWorkload(clusters=(Cluster(id=0, neurons=("a",), synapses=()),),
                               channels=(), window_seconds=1.0,
                               total_spike_count=1000, total_synapse_count=0)
        spike_e, routing_e, latency = traffic_energy_and_latency(
            cw, Mapping(assignment=(0,)), hw)
        assert spike_e == pytest.approx(50e-9, rel=1e-12)
        assert routing_e == 0.0
        assert latency == 1.0

    def test_same_tile_routing_free(self):
        hw = load_hardware({"clusters_per_tile": 2})
        cw = two_cluster_workload(channel_spikes=123_456)
        _, routing_e, latency = traffic_energy_and_latency(
            cw, Mapping(assignment=(0, 0)), hw)
        assert routing_e == 0.0
        assert latency == 1.0

    def test_adjacent_tiles_million_spikes(self):
        hw = default_hardware()
        cw = two_cluster_workload(channel_spikes=10 ** 6)
        _, routing_e, latency = traffic_energy_and_latency(
            cw, Mapping(assignment=(0, 1)), hw)
        assert routing_e == pytest.approx(147e-6, rel=1e-12)
        assert latency == pytest.approx(1.0 + 1e6 / 1.8e9, rel=1e-12)

    def test_latency_never_below_window(self):
        hw = default_hardware()
        cw = two_cluster_workload(channel_spikes=0)
        _, _, latency = traffic_energy_and_latency(cw, Mapping(assignment=(0, 3)), hw)
        assert latency >= cw.window_seconds

    def test_incomplete_mapping_rejected(self):
        hw = default_hardware()
        cw = two_cluster_workload(channel_spikes=5)
        with pytest.raises(ValueError):
            traffic_energy_and_latency(cw, Mapping(assignment=(0,)), hw)

    def test_hop_count_scales_routing(self):
        hw = default_hardware()  # 4 tiles on a 2x2 mesh
        cw = two_cluster_workload(channel_spikes=1000)
        _, adjacent, _ = traffic_energy_and_latency(cw, Mapping(assignment=(0, 1)), hw)
        _, diagonal, _ = traffic_energy_and_latency(cw, Mapping(assignment=(0, 3)), hw)
        assert diagonal == pytest.approx(2 * adjacent, rel=1e-12)


class TestMesh:
    def test_shapes(self):
        assert mesh_shape(4) == (2, 2)
        assert mesh_shape(1) == (1, 1)
        assert mesh_shape(6) == (2, 3)

    def test_hops_match_route_length(self):
        hw = load_hardware({"n_tiles": 6})
        for src in range(6):
            for dst in range(6):
                assert hops(src, dst, hw) == len(route_links(src, dst, hw))

    def test_route_is_connected_path(self):
        hw = load_hardware({"n_tiles": 9})
        links = route_links(0, 8, hw)
        assert links[0][0] == 0 and links[-1][1] == 8
        for (a, b), (c, d) in zip(links, links[1:]):
            assert b == c


class TestEnergyReport:
    def _report(self, hw, cw, assignment):
        fields = [ambient_field(hw) for _ in range(hw.n_tiles)]
        return build_energy_report(cw, Mapping(assignment=assignment), fields, hw)

    def test_zero_spike_workload_share_is_one(self):
        hw = load_hardware({"crossbar_dim": 8})
        cw = two_cluster_workload(channel_spikes=0, total_spikes=0)
        report = self._report(hw, cw, (0, 1))
        assert report.spike_energy_j == 0.0
        assert report.routing_energy_j == 0.0
        assert report.leakage_share == 1.0

    def test_accounting_identity_bit_exact(self):
        hw = load_hardware({"crossbar_dim": 8})
        cw = two_cluster_workload(channel_spikes=777, total_spikes=123_456)
        report = self._report(hw, cw, (0, 1))
        assert report.total_energy_j == (report.spike_energy_j
                                         + report.routing_energy_j
                                         + report.leakage_energy_j)
        assert 0.0 <= report.leakage_share <= 1.0

    def test_leakage_energy_is_power_times_latency(self):
        hw = load_hardware({"crossbar_dim": 8})
        cw = two_cluster_workload(channel_spikes=10 ** 7)
        report = self._report(hw, cw, (0, 1))
        assert report.leakage_energy_j == pytest.approx(
            report.leakage_power_total_w * report.latency_s, rel=1e-12)

    def test_thermal_safety_flags_crystallization(self, desk_hw, caplog):
        cw = two_cluster_workload(channel_spikes=0, total_spikes=10)
        fields = [ambient_field(desk_hw) for _ in range(desk_hw.n_tiles)]
        hot = np.full((desk_hw.crossbar_dim,) * 2, desk_hw.t_ambient)
        hot[3, 3] = desk_hw.pcm.crystallization_temp  # 360 K
        fields[1] = ThermalField(temperature=hot, converged=True, sweeps=1,
                                 t_ambient=desk_hw.t_ambient)
        with caplog.at_level("WARNING", logger="thermomap.power"):
            report = build_energy_report(cw, Mapping(assignment=(0, 1)), fields, desk_hw)
        assert report.peak_temperature_k == desk_hw.pcm.crystallization_temp
        assert not report.thermal_safety
        assert any("crystallization" in rec.message for rec in caplog.records)

    def test_text_rendering_is_aligned(self):
        hw = load_hardware({"crossbar_dim": 8})
        cw = two_cluster_workload(channel_spikes=5)
        text = format_report_text(self._report(hw, cw, (0, 1)))
        lines = text.strip().split("\n")
        assert len(lines) == 10
        assert all("  " in line for line in lines)
