"""SNN workload representation: neurons, synapses, and per-synapse spike counts.

Spike traffic is stored as counts over one simulation window rather than exact
timestamps; the thermal model consumes access duty cycles, so counts are
sufficient and keep workload files small and deterministic.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Iterable

import numpy as np

from .errors import ConfigError, WorkloadSemanticError, WorkloadSyntaxError

NEURON_KINDS = ("input", "hidden", "output")

PATTERN_FEEDFORWARD = "feedforward"
PATTERN_CONV_SPARSE = "convolutional-sparse"
PATTERN_RESERVOIR = "recurrent-reservoir"
PATTERNS = (PATTERN_FEEDFORWARD, PATTERN_CONV_SPARSE, PATTERN_RESERVOIR)


@dataclass(frozen=True)
class Neuron:
    id: str
    kind: str = "hidden"


@dataclass(frozen=True)
class Synapse:
    pre: str
    post: str
    weight: float
    spike_count: int


@dataclass(frozen=True)
class SnnWorkload:
    """Validated, immutable workload. Construction checks every invariant."""

    neurons: tuple[Neuron, ...]
    synapses: tuple[Synapse, ...]
    window_seconds: float

    def __post_init__(self) -> None:
        if not (isinstance(self.window_seconds, (int, float))
                and math.isfinite(self.window_seconds) and self.window_seconds > 0):
            raise WorkloadSemanticError(f"window_seconds must be positive, got {self.window_seconds!r}")
        ids = set()
        for neuron in self.neurons:
            if neuron.kind not in NEURON_KINDS:
                raise WorkloadSemanticError(f"neuron {neuron.id!r} has unknown kind {neuron.kind!r}")
            if neuron.id in ids:
                raise WorkloadSemanticError(f"duplicate neuron id {neuron.id!r}")
            ids.add(neuron.id)
        seen_pairs = set()
        for syn in self.synapses:
            if syn.pre not in ids:
                raise WorkloadSemanticError(f"synapse ({syn.pre!r} -> {syn.post!r}) references undeclared neuron {syn.pre!r}")
            if syn.post not in ids:
                raise WorkloadSemanticError(f"synapse ({syn.pre!r} -> {syn.post!r}) references undeclared neuron {syn.post!r}")
            if (syn.pre, syn.post) in seen_pairs:
                raise WorkloadSemanticError(f"duplicate synapse ({syn.pre!r} -> {syn.post!r})")
            seen_pairs.add((syn.pre, syn.post))
            if not isinstance(syn.spike_count, int) or isinstance(syn.spike_count, bool) or syn.spike_count < 0:
                raise WorkloadSemanticError(
                    f"synapse ({syn.pre!r} -> {syn.post!r}) has invalid spike_count {syn.spike_count!r}")
            if not (isinstance(syn.weight, (int, float)) and math.isfinite(syn.weight)):
                raise WorkloadSemanticError(
                    f"synapse ({syn.pre!r} -> {syn.post!r}) has non-finite weight {syn.weight!r}")

    @property
    def total_spike_count(self) -> int:
        return sum(s.spike_count for s in self.synapses)

    def neuron_ids(self) -> set[str]:
        return {n.id for n in self.neurons}


def parse_workload(source: bytes | str) -> SnnWorkload:
    """Parse the JSON workload file format into a validated SnnWorkload."""
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise WorkloadSyntaxError(f"workload is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise WorkloadSyntaxError(f"workload must be a JSON object, got {type(doc).__name__}")
    unknown = sorted(set(doc) - {"window_seconds", "neurons", "synapses"})
    if unknown:
        raise WorkloadSyntaxError(f"unknown key(s) {unknown} in workload")
    for key in ("window_seconds", "neurons", "synapses"):
        if key not in doc:
            raise WorkloadSyntaxError(f"workload is missing required key {key!r}")
    if not isinstance(doc["neurons"], list) or not isinstance(doc["synapses"], list):
        raise WorkloadSyntaxError("workload 'neurons' and 'synapses' must be arrays")

    neurons = []
    for record in doc["neurons"]:
        if not isinstance(record, dict) or not isinstance(record.get("id"), str):
            raise WorkloadSyntaxError(f"malformed neuron record {record!r}")
        unknown = sorted(set(record) - {"id", "kind"})
        if unknown:
            raise WorkloadSyntaxError(f"unknown key(s) {unknown} in neuron record {record!r}")
        neurons.append(Neuron(id=record["id"], kind=record.get("kind", "hidden")))

    synapses = []
    for record in doc["synapses"]:
        if not isinstance(record, dict):
            raise WorkloadSyntaxError(f"malformed synapse record {record!r}")
        unknown = sorted(set(record) - {"pre", "post", "weight", "spike_count"})
        if unknown:
            raise WorkloadSyntaxError(f"unknown key(s) {unknown} in synapse record {record!r}")
        try:
            pre, post = record["pre"], record["post"]
            weight = record["weight"]
            count = record["spike_count"]
        except KeyError as exc:
            raise WorkloadSyntaxError(f"synapse record {record!r} is missing {exc}") from exc
        if not isinstance(pre, str) or not isinstance(post, str):
            raise WorkloadSyntaxError(f"synapse record {record!r} has non-string endpoints")
        if not isinstance(weight, (int, float)) or isinstance(weight, bool):
            raise WorkloadSyntaxError(f"synapse record {record!r} has non-numeric weight")
        if not isinstance(count, int) or isinstance(count, bool):
            raise WorkloadSyntaxError(f"synapse record {record!r} has non-integer spike_count")
        synapses.append(Synapse(pre=pre, post=post, weight=float(weight), spike_count=count))

    window = doc["window_seconds"]
    if not isinstance(window, (int, float)) or isinstance(window, bool):
        raise WorkloadSyntaxError(f"window_seconds must be a number, got {window!r}")

    return SnnWorkload(neurons=tuple(neurons), synapses=tuple(synapses), window_seconds=float(window))


def emit_workload(w: SnnWorkload) -> str:
    """Serialize to the workload file format; parse(emit(w)) == w."""
    doc = {
        "window_seconds": w.window_seconds,
        "neurons": [{"id": n.id, "kind": n.kind} for n in w.neurons],
        "synapses": [
            {"pre": s.pre, "post": s.post, "weight": s.weight, "spike_count": s.spike_count}
            for s in w.synapses
        ],
    }
    return json.dumps(doc, separators=(",", ":")) + "\n"


@dataclass(frozen=True)
class SynthSpec:
    """Parameters for deterministic synthetic workload generation.

    hot_fraction/hot_multiplier mark the leading fraction of each layer as hot:
    their outgoing synapses fire at rate_hz * hot_multiplier. With
    hot_fraction = 0 the mean per-synapse count equals rate_hz * window_seconds.
    """

    pattern: str
    layers: tuple[int, ...]
    rate_hz: float
    window_seconds: float = 1.0
    seed: int = 0
    conn_prob: float = 0.1      # recurrent-reservoir edge probability
    kernel: int = 9             # convolutional-sparse fan-in per post neuron
    hot_fraction: float = 0.0
    hot_multiplier: float = 1.0


def _validate_spec(spec: SynthSpec) -> None:
    if spec.pattern not in PATTERNS:
        raise ConfigError(f"unknown connectivity pattern {spec.pattern!r}, expected one of {PATTERNS}")
    if not spec.layers:
        raise ConfigError("synthesis spec has no layers")
    if any(not isinstance(s, int) or s < 1 for s in spec.layers):
        raise ConfigError(f"layer sizes must be >= 1, got {spec.layers}")
    if spec.rate_hz < 0:
        raise ConfigError(f"activation rate must be >= 0, got {spec.rate_hz}")
    if spec.window_seconds <= 0:
        raise ConfigError(f"window_seconds must be positive, got {spec.window_seconds}")
    if spec.seed < 0:
        raise ConfigError(f"seed must be >= 0, got {spec.seed}")
    if spec.pattern == PATTERN_FEEDFORWARD and len(spec.layers) < 2:
        raise ConfigError("feedforward pattern needs at least 2 layers")
    if spec.pattern == PATTERN_CONV_SPARSE and len(spec.layers) < 2:
        raise ConfigError("convolutional-sparse pattern needs at least 2 layers")
    if spec.pattern == PATTERN_RESERVOIR and len(spec.layers) != 1:
        raise ConfigError("recurrent-reservoir pattern takes exactly one layer size")
    if not (0.0 <= spec.hot_fraction <= 1.0):
        raise ConfigError(f"hot_fraction must be in [0, 1], got {spec.hot_fraction}")
    if spec.hot_multiplier < 0:
        raise ConfigError(f"hot_multiplier must be >= 0, got {spec.hot_multiplier}")
    if not (0.0 <= spec.conn_prob <= 1.0):
        raise ConfigError(f"conn_prob must be in [0, 1], got {spec.conn_prob}")
    if spec.kernel < 1:
        raise ConfigError(f"kernel must be >= 1, got {spec.kernel}")


def _layer_ids(layers: tuple[int, ...]) -> list[list[str]]:
    return [[f"l{li}n{idx}" for idx in range(size)] for li, size in enumerate(layers)]


def _edges(spec: SynthSpec, ids: list[list[str]], rng: np.random.Generator) -> Iterable[tuple[str, str]]:
    if spec.pattern == PATTERN_FEEDFORWARD:
        for pre_layer, post_layer in zip(ids, ids[1:]):
            for pre in pre_layer:
                for post in post_layer:
                    yield pre, post
    elif spec.pattern == PATTERN_CONV_SPARSE:
        for li, (pre_layer, post_layer) in enumerate(zip(ids, ids[1:])):
            n_pre = len(pre_layer)
            k = min(spec.kernel, n_pre)
            for j, post in enumerate(post_layer):
                center = round(j * n_pre / len(post_layer))
                for t in range(k):
                    pre_idx = (center - k // 2 + t) % n_pre
                    yield pre_layer[pre_idx], post
    else:  # recurrent reservoir
        pool = ids[0]
        for i, pre in enumerate(pool):
            draws = rng.random(len(pool))
            for j, post in enumerate(pool):
                if i != j and draws[j] < spec.conn_prob:
                    yield pre, post


def synthesize_workload(spec: SynthSpec) -> SnnWorkload:
    """Generate a workload; a pure function of (spec, seed)."""
    _validate_spec(spec)
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 0x5754]))
    ids = _layer_ids(spec.layers)

    hot: set[str] = set()
    if spec.hot_fraction > 0:
        for layer in ids:
            n_hot = int(round(spec.hot_fraction * len(layer)))
            hot.update(layer[:n_hot])

    neurons = []
    last = len(ids) - 1
    for li, layer in enumerate(ids):
        if spec.pattern == PATTERN_RESERVOIR:
            kind = "hidden"
        else:
            kind = "input" if li == 0 else ("output" if li == last else "hidden")
        neurons.extend(Neuron(id=nid, kind=kind) for nid in layer)

    synapses = []
    for pre, post in _edges(spec, ids, rng):
        rate = spec.rate_hz * (spec.hot_multiplier if pre in hot else 1.0)
        count = int(rng.poisson(rate * spec.window_seconds))
        weight = float(rng.uniform(-1.0, 1.0))
        synapses.append(Synapse(pre=pre, post=post, weight=weight, spike_count=count))

    return SnnWorkload(neurons=tuple(neurons), synapses=tuple(synapses),
                       window_seconds=spec.window_seconds)


def parse_synth_string(text: str) -> tuple[str, tuple[int, ...]]:
    """Parse the CLI shorthand '<pattern>:<sizes>', e.g. 'ff:784,100,10'."""
    aliases = {
        "ff": PATTERN_FEEDFORWARD,
        "feedforward": PATTERN_FEEDFORWARD,
        "conv": PATTERN_CONV_SPARSE,
        "convolutional-sparse": PATTERN_CONV_SPARSE,
        "rr": PATTERN_RESERVOIR,
        "recurrent-reservoir": PATTERN_RESERVOIR,
    }
    head, sep, tail = text.partition(":")
    if not sep or head not in aliases:
        raise ConfigError(
            f"bad synthesis spec {text!r}; expected '<pattern>:<sizes>' with pattern "
            f"one of {sorted(set(aliases))}")
    try:
        layers = tuple(int(part) for part in tail.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad layer sizes in synthesis spec {text!r}") from exc
    return aliases[head], layers


def neuron_fan(w: SnnWorkload) -> tuple[dict[str, int], dict[str, int]]:
    """(fan_out, fan_in) per neuron id; used for crossbar feasibility checks."""
    fan_out: dict[str, int] = {n.id: 0 for n in w.neurons}
    fan_in: dict[str, int] = {n.id: 0 for n in w.neurons}
    for syn in w.synapses:
        fan_out[syn.pre] += 1
        fan_in[syn.post] += 1
    return fan_out, fan_in


def workload_summary(w: SnnWorkload) -> dict[str, Any]:
    return {
        "neurons": len(w.neurons),
        "synapses": len(w.synapses),
        "total_spike_count": w.total_spike_count,
        "window_seconds": w.window_seconds,
    }
