"""Partition an SNN into crossbar-sized clusters and place synapses on cells.

Clustering is greedy: neurons are laid into clusters in breadth-first order
until crossbar capacity is reached, then refined by single-neuron moves that
strictly reduce the total cut spike traffic (multicast semantics: a neuron's
spikes count once per destination crossbar). Synapses whose endpoints end up in
different clusters become channel traffic on the interconnect instead of
crossbar cells.

Within a crossbar, distinct pre-neurons take wordlines and distinct
post-neurons take bitlines. The default placement is thermally aware: the most
active neurons are assigned to the rows/columns with the longest current paths
(lowest read current), flattening the intra-crossbar thermal gradient. Naive
index-order placement is available to reproduce plain crossbar-granularity
mapping.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InfeasibleWorkloadError
from .hardware import (CellPosition, HardwareModel, cell_read_current,
                       path_resistance, pcm_resistance, synapse_state)
from .workload import SnnWorkload, Synapse, neuron_fan


@dataclass(frozen=True)
class Channel:
    """Aggregated spike traffic between a pair of clusters."""

    src: int
    dst: int
    spike_count: int
    cut_synapses: int


@dataclass(frozen=True)
class Cluster:
    id: int
    neurons: tuple[str, ...]            # sorted ids
    synapses: tuple[Synapse, ...]       # internal: both endpoints in `neurons`
    placement: tuple[CellPosition, ...] | None = None  # parallel to `synapses`

    @property
    def rows_used(self) -> int:
        return len({s.pre for s in self.synapses})

    @property
    def cols_used(self) -> int:
        return len({s.post for s in self.synapses})

    @property
    def total_spike_count(self) -> int:
        return sum(s.spike_count for s in self.synapses)


@dataclass(frozen=True)
class ClusteredWorkload:
    clusters: tuple[Cluster, ...]
    channels: tuple[Channel, ...]
    window_seconds: float
    total_spike_count: int      # over all synapses, internal and cut
    total_synapse_count: int


def _row_budget(hw: HardwareModel) -> int:
    # With multi-cluster tiles, clusters are row-banded; capping each cluster's
    # wordlines guarantees any clusters_per_tile of them stack into one crossbar.
    return hw.crossbar_dim // hw.clusters_per_tile


class _Partition:
    """Mutable neuron partition with incremental capacity and cut bookkeeping."""

    def __init__(self, w: SnnWorkload, row_budget: int, col_budget: int, syn_budget: int):
        self.row_budget = row_budget
        self.col_budget = col_budget
        self.syn_budget = syn_budget
        self.out_edges: dict[str, list[tuple[str, int]]] = {n.id: [] for n in w.neurons}
        self.preds: dict[str, set[str]] = {n.id: set() for n in w.neurons}
        for s in w.synapses:
            self.out_edges[s.pre].append((s.post, s.spike_count))
            self.preds[s.post].add(s.pre)
        self.cluster_of: dict[str, int] = {}
        self.members: list[set[str]] = []
        self.pre_deg: list[dict[str, int]] = []
        self.post_deg: list[dict[str, int]] = []
        self.n_internal: list[int] = []
        # potential footprint: members that could still need a row/column once
        # their neighbors arrive; used only by the greedy fill
        self.pot_rows: list[int] = []
        self.pot_cols: list[int] = []

    def new_cluster(self) -> int:
        self.members.append(set())
        self.pre_deg.append({})
        self.post_deg.append({})
        self.n_internal.append(0)
        self.pot_rows.append(0)
        self.pot_cols.append(0)
        return len(self.members) - 1

    def _incident_internal(self, v: str, k: int) -> list[tuple[str, str]]:
        """Internal (pre, post) edges created/destroyed when v joins/leaves cluster k."""
        mem = self.members[k]
        edges = [(v, p) for p, _ in self.out_edges[v] if p in mem or p == v]
        edges.extend((u, v) for u in self.preds[v] if u in mem and u != v)
        return edges

    def can_add(self, v: str, k: int) -> bool:
        edges = self._incident_internal(v, k)
        pre_deg, post_deg = self.pre_deg[k], self.post_deg[k]
        new_pres = {pre for pre, _ in edges if pre not in pre_deg}
        new_posts = {post for _, post in edges if post not in post_deg}
        return (len(pre_deg) + len(new_pres) <= self.row_budget
                and len(post_deg) + len(new_posts) <= self.col_budget
                and self.n_internal[k] + len(edges) <= self.syn_budget)

    def can_add_fill(self, v: str, k: int) -> bool:
        """Stricter fill-phase check: also reserve a wordline/bitline for every
        member that has any fan at all, so neurons whose partners have not been
        visited yet cannot pile into a cluster that can never host their synapses."""
        if not self.can_add(v, k):
            return False
        return (self.pot_rows[k] + (1 if self.out_edges[v] else 0) <= self.row_budget
                and self.pot_cols[k] + (1 if self.preds[v] else 0) <= self.col_budget)

    def add(self, v: str, k: int) -> None:
        for pre, post in self._incident_internal(v, k):
            self.pre_deg[k][pre] = self.pre_deg[k].get(pre, 0) + 1
            self.post_deg[k][post] = self.post_deg[k].get(post, 0) + 1
            self.n_internal[k] += 1
        self.members[k].add(v)
        self.cluster_of[v] = k
        self.pot_rows[k] += 1 if self.out_edges[v] else 0
        self.pot_cols[k] += 1 if self.preds[v] else 0

    def remove(self, v: str) -> None:
        k = self.cluster_of[v]
        self.members[k].discard(v)
        for pre, post in self._incident_internal(v, k):
            self.pre_deg[k][pre] -= 1
            if self.pre_deg[k][pre] == 0:
                del self.pre_deg[k][pre]
            self.post_deg[k][post] -= 1
            if self.post_deg[k][post] == 0:
                del self.post_deg[k][post]
            self.n_internal[k] -= 1
        del self.cluster_of[v]
        self.pot_rows[k] -= 1 if self.out_edges[v] else 0
        self.pot_cols[k] -= 1 if self.preds[v] else 0

    def out_contribution(self, u: str) -> int:
        """Multicast cut traffic sourced at u: max count per foreign destination cluster."""
        home = self.cluster_of[u]
        best: dict[int, int] = {}
        for post, count in self.out_edges[u]:
            d = self.cluster_of[post]
            if d != home and count > best.get(d, -1):
                best[d] = count
        return sum(best.values())

    def total_cut(self) -> int:
        return sum(self.out_contribution(u) for u in self.cluster_of)

    def move_delta(self, v: str, dst: int) -> tuple[int, int]:
        """(change in cut spike traffic, change in cut edge count) if v moves to
        dst; the edge count breaks multicast plateaus. O(local degree)."""
        src = self.cluster_of[v]
        affected = {v} | {u for u in self.preds[v] if u != v}
        before = sum(self.out_contribution(u) for u in affected)
        internal_before = len(self._incident_internal(v, src)) if v in self.members[src] else 0
        self.cluster_of[v] = dst
        after = sum(self.out_contribution(u) for u in affected)
        self.cluster_of[v] = src
        internal_after = len(self._incident_internal(v, dst))
        return after - before, internal_before - internal_after


def _components(w: SnnWorkload) -> list[list[str]]:
    """Weakly-connected components, each sorted, ordered by smallest member id."""
    undirected: dict[str, set[str]] = {n.id: set() for n in w.neurons}
    for s in w.synapses:
        undirected[s.pre].add(s.post)
        undirected[s.post].add(s.pre)
    seen: set[str] = set()
    comps = []
    for nid in sorted(undirected):
        if nid in seen:
            continue
        comp, queue = [], [nid]
        seen.add(nid)
        while queue:
            v = queue.pop()
            comp.append(v)
            for nxt in undirected[v]:
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        comps.append(sorted(comp))
    return comps


def _bfs_order(w: SnnWorkload) -> list[str]:
    """Breadth-first layer order, one weakly-connected component at a time."""
    _fan_out, fan_in = neuron_fan(w)
    kind = {n.id: n.kind for n in w.neurons}
    succ: dict[str, list[str]] = {n.id: [] for n in w.neurons}
    for s in w.synapses:
        succ[s.pre].append(s.post)

    order: list[str] = []
    for comp in _components(w):
        roots = [nid for nid in comp if kind[nid] == "input"] \
            or [nid for nid in comp if fan_in[nid] == 0] \
            or [comp[0]]
        seen = set(roots)
        queue = list(roots)
        placed = []
        while queue:
            v = queue.pop(0)
            placed.append(v)
            for nxt in sorted(set(succ[v])):
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        placed.extend(nid for nid in comp if nid not in seen)
        order.extend(placed)
    return order


def check_crossbar_feasibility(w: SnnWorkload, hw: HardwareModel) -> None:
    """Reject neurons whose fan-in or fan-out exceeds one crossbar row/column."""
    fan_out, fan_in = neuron_fan(w)
    for nid in sorted(fan_out):
        if fan_out[nid] > hw.crossbar_dim:
            raise InfeasibleWorkloadError(
                f"neuron {nid!r} has fan-out {fan_out[nid]} exceeding crossbar "
                f"dimension {hw.crossbar_dim}; neuron splitting is not supported")
        if fan_in[nid] > hw.crossbar_dim:
            raise InfeasibleWorkloadError(
                f"neuron {nid!r} has fan-in {fan_in[nid]} exceeding crossbar "
                f"dimension {hw.crossbar_dim}; neuron splitting is not supported")


def cluster_workload(w: SnnWorkload, hw: HardwareModel, seed: int = 0,
                     refine: bool = True) -> ClusteredWorkload:
    """Partition a workload into crossbar-sized clusters, minimizing cut traffic.

    Deterministic for a fixed seed; the produced clustering is a local minimum
    of the multicast cut objective under single-neuron moves. refine=False
    stops after the breadth-first greedy fill (useful for before/after studies).
    """
    check_crossbar_feasibility(w, hw)

    part = _Partition(w, _row_budget(hw), hw.crossbar_dim,
                      _row_budget(hw) * hw.crossbar_dim)
    current = part.new_cluster()
    for v in _bfs_order(w):
        if part.can_add_fill(v, current):
            part.add(v, current)
        else:
            current = part.new_cluster()
            part.add(v, current)   # a lone neuron always fits a fresh cluster

    if refine:
        # KL-style refinement: best strictly-improving single-neuron move per
        # neuron, swept until a full pass makes no move. The objective is
        # lexicographic (cut spike traffic, cut edge count): plateau moves that
        # keep traffic equal but internalize synapses are taken, which never
        # hurts the primary objective and guarantees termination.
        rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
        scan = [n.id for n in w.neurons]
        rng.shuffle(scan)
        n_clusters = len(part.members)
        moved = True
        while moved:
            moved = False
            for v in scan:
                src = part.cluster_of[v]
                best_delta, best_dst = (0, 0), None
                for dst in range(n_clusters):
                    if dst == src or not part.can_add(v, dst):
                        continue
                    delta = part.move_delta(v, dst)
                    if delta < best_delta:
                        best_delta, best_dst = delta, dst
                if best_dst is not None:
                    part.remove(v)
                    part.add(v, best_dst)
                    moved = True

    return _finalize(w, part)


def _finalize(w: SnnWorkload, part: _Partition) -> ClusteredWorkload:
    occupied = [k for k, mem in enumerate(part.members) if mem]
    renumber = {old: new for new, old in enumerate(occupied)}
    cl_of = {v: renumber[k] for v, k in part.cluster_of.items()}

    internal: dict[int, list[Synapse]] = {k: [] for k in range(len(occupied))}
    cut_max: dict[tuple[int, int, str], int] = {}
    cut_edges: dict[tuple[int, int], int] = {}
    for s in w.synapses:
        a, b = cl_of[s.pre], cl_of[s.post]
        if a == b:
            internal[a].append(s)
        else:
            key = (a, b, s.pre)
            cut_max[key] = max(cut_max.get(key, 0), s.spike_count)
            cut_edges[(a, b)] = cut_edges.get((a, b), 0) + 1

    channel_counts: dict[tuple[int, int], int] = {}
    for (a, b, _pre), count in cut_max.items():
        channel_counts[(a, b)] = channel_counts.get((a, b), 0) + count

    clusters = tuple(
        Cluster(id=k,
                neurons=tuple(sorted(part.members[old])),
                synapses=tuple(internal[k]))
        for k, old in enumerate(occupied)
    )
    channels = tuple(
        Channel(src=a, dst=b, spike_count=channel_counts[(a, b)],
                cut_synapses=cut_edges[(a, b)])
        for a, b in sorted(cut_edges)
    )
    return ClusteredWorkload(
        clusters=clusters,
        channels=channels,
        window_seconds=w.window_seconds,
        total_spike_count=w.total_spike_count,
        total_synapse_count=len(w.synapses),
    )


def crossbar_row_order(hw: HardwareModel, naive: bool = False) -> list[int]:
    """Row indices in assignment order: longest current path first (naive: 0, 1, ...)."""
    n = hw.crossbar_dim
    if naive:
        return list(range(n))
    return sorted(range(n), key=lambda i: (-path_resistance(CellPosition(i, 0), hw), i))


def crossbar_col_order(hw: HardwareModel, naive: bool = False) -> list[int]:
    n = hw.crossbar_dim
    if naive:
        return list(range(n))
    return sorted(range(n), key=lambda j: (-path_resistance(CellPosition(0, j), hw), j))


def _check_cluster_fits(c: Cluster, hw: HardwareModel) -> None:
    n = hw.crossbar_dim
    if c.rows_used > n or c.cols_used > n or len(c.synapses) > n * n:
        raise InfeasibleWorkloadError(
            f"cluster {c.id} needs {c.rows_used} rows, {c.cols_used} cols, "
            f"{len(c.synapses)} cells; crossbar is {n}x{n}")


def place_cluster(c: Cluster, hw: HardwareModel, naive: bool = False,
                  row_offset: int = 0) -> tuple[CellPosition, ...]:
    """Cell positions for a cluster's synapses, its rows banded at row_offset.

    Neurons are ranked by descending total spike count (ties by id) and handed
    rows/columns in longest-path-first order, so the hottest traffic lands on
    the cells with the lowest read current.
    """
    _check_cluster_fits(c, hw)
    pre_totals: dict[str, int] = {}
    post_totals: dict[str, int] = {}
    for s in c.synapses:
        pre_totals[s.pre] = pre_totals.get(s.pre, 0) + s.spike_count
        post_totals[s.post] = post_totals.get(s.post, 0) + s.spike_count

    def ranked(totals: dict[str, int]) -> list[str]:
        if naive:
            return sorted(totals)
        return sorted(totals, key=lambda nid: (-totals[nid], nid))

    rows = crossbar_row_order(hw, naive)
    cols = crossbar_col_order(hw, naive)
    if row_offset + len(pre_totals) > hw.crossbar_dim:
        raise InfeasibleWorkloadError(
            f"cluster {c.id} does not fit at row offset {row_offset}: needs "
            f"{len(pre_totals)} rows in a {hw.crossbar_dim}-row crossbar")
    row_of = {nid: rows[row_offset + rank] for rank, nid in enumerate(ranked(pre_totals))}
    col_of = {nid: cols[rank] for rank, nid in enumerate(ranked(post_totals))}
    return tuple(CellPosition(row_of[s.pre], col_of[s.post]) for s in c.synapses)


def place_synapses_in_crossbar(c: Cluster, hw: HardwareModel, naive: bool = False) -> Cluster:
    """Fill the cluster's per-cell placement for a crossbar of its own."""
    return replace(c, placement=place_cluster(c, hw, naive=naive, row_offset=0))


def tile_band_order(clusters: list[Cluster], naive: bool = False) -> list[Cluster]:
    """Order in which co-located clusters stack their row bands (hottest first)."""
    if naive:
        return sorted(clusters, key=lambda c: c.id)
    return sorted(clusters, key=lambda c: (-c.total_spike_count, c.id))


def assemble_tile(clusters: list[Cluster], hw: HardwareModel,
                  naive: bool = False) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(access counts, read currents, cell resistances) for one tile's crossbar.

    Co-located clusters occupy disjoint row bands; columns are per-cluster.
    """
    n = hw.crossbar_dim
    counts = np.zeros((n, n), dtype=np.int64)
    currents = np.zeros((n, n))
    resistances = np.full((n, n), hw.pcm.r_set)
    offset = 0
    for c in tile_band_order(clusters, naive):
        placements = place_cluster(c, hw, naive=naive, row_offset=offset)
        offset += c.rows_used
        for s, pos in zip(c.synapses, placements):
            state = synapse_state(s.weight, hw)
            counts[pos.row, pos.col] += s.spike_count
            currents[pos.row, pos.col] = cell_read_current(pos, state, hw)
            resistances[pos.row, pos.col] = pcm_resistance(state, hw)
    return counts, currents, resistances


def clusters_to_doc(cw: ClusteredWorkload) -> dict:
    """JSON form of a clustered workload, for --dump-clusters and fixtures."""
    return {
        "window_seconds": cw.window_seconds,
        "total_spike_count": cw.total_spike_count,
        "total_synapse_count": cw.total_synapse_count,
        "clusters": [
            {
                "id": c.id,
                "neurons": list(c.neurons),
                "synapses": [
                    {"pre": s.pre, "post": s.post, "weight": s.weight,
                     "spike_count": s.spike_count}
                    for s in c.synapses
                ],
                "placement": (
                    [{"row": p.row, "col": p.col} for p in c.placement]
                    if c.placement is not None else None
                ),
            }
            for c in cw.clusters
        ],
        "channels": [
            {"src": ch.src, "dst": ch.dst, "spike_count": ch.spike_count,
             "cut_synapses": ch.cut_synapses}
            for ch in cw.channels
        ],
    }
