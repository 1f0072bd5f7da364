"""Selective serialization of high-impact layers to suppress crosstalk."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable

from .analysis import AnalysisError, ImpactReport, tvd
from .circuit import Circuit, CircuitError, GateKind, Origin, barrier, compute_layers
from .noise import NoiseModel
from .sim import Distribution, run_noisy


class MitigationError(CircuitError):
    pass


@dataclass(frozen=True)
class MitigationPlan:
    target_layers: tuple[int, ...]
    inserted_barriers: int
    before_depth: int
    after_depth: int

    def to_dict(self) -> dict:
        return {**asdict(self), "target_layers": list(self.target_layers)}


def select_target_layers(report: ImpactReport, k: int) -> set[int]:
    """Layers holding the k highest-impact records."""
    if k < 1:
        raise AnalysisError("k must be a positive integer")
    if not report.records:
        raise AnalysisError("report has no records")
    return {r.layer for r in report.records[:k]}


def serialize_layers(circuit: Circuit, layers: Iterable[int]) -> tuple[Circuit, MitigationPlan]:
    """Run the ops of each target layer one at a time, fenced by full-width barriers.

    Ops are re-emitted in layer order (original order inside a layer), which
    keeps every per-qubit order and so every other op's layer. A
    closing barrier follows a serialized layer only when later gates exist,
    so nothing from the next layer slides in beside its last op.
    """
    schedule = compute_layers(circuit)
    targets = set(layers)
    gate_layers = {
        schedule.layer_of[i] for i, op in enumerate(circuit.ops) if op.kind is not GateKind.MEASURE
    }
    unknown = targets - gate_layers
    if unknown:
        raise MitigationError(f"unknown layers {sorted(unknown)}")
    by_layer = schedule.layers()
    crowded = {
        layer for layer in targets
        if sum(circuit.ops[j].kind is not GateKind.MEASURE for j in by_layer[layer]) >= 2
    }
    if not crowded:
        plan = MitigationPlan(tuple(sorted(targets)), 0, schedule.num_layers, schedule.num_layers)
        return circuit, plan
    order = sorted(range(len(circuit.ops)), key=lambda i: (schedule.layer_of[i], i))
    last_gate_layer = max(gate_layers, default=-1)
    full = tuple(range(circuit.num_qubits))

    ops, inserted, done = [], 0, set()
    for i in order:
        layer = schedule.layer_of[i]
        members = [j for j in by_layer[layer] if circuit.ops[j].kind is not GateKind.MEASURE]
        if layer not in targets or len(members) < 2:
            ops.append(circuit.ops[i])
            continue
        if layer in done:
            continue
        done.add(layer)
        for pos, j in enumerate(members):
            if pos:
                ops.append(barrier(*full, origin=Origin.MITIGATION_BARRIER))
                inserted += 1
            ops.append(circuit.ops[j])
        if layer < last_gate_layer:
            ops.append(barrier(*full, origin=Origin.MITIGATION_BARRIER))
            inserted += 1
        # measurements sharing the layer keep their place after the serialized ops
        ops.extend(circuit.ops[j] for j in by_layer[layer] if j not in members)
    mitigated = circuit.with_ops(ops)
    plan = MitigationPlan(
        target_layers=tuple(sorted(targets)),
        inserted_barriers=inserted,
        before_depth=schedule.num_layers,
        after_depth=compute_layers(mitigated).num_layers,
    )
    return mitigated, plan


def evaluate_mitigation(
    circuit: Circuit,
    mitigated: Circuit,
    model: NoiseModel,
    shots: int,
    seed: int,
    reference: Distribution,
) -> tuple[float, float]:
    """TVD to the reference before and after mitigation, with a shared seed."""
    before = run_noisy(circuit, model, shots, seed)
    after = run_noisy(mitigated, model, shots, seed)
    return tvd(before, reference), tvd(after, reference)
