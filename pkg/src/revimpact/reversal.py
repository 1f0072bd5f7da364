"""Reversed-pair insertion: one variant circuit per gate, plus group reversal."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable

from .circuit import Circuit, CircuitError, GateKind, GateOp, Origin, adjoint_of, barrier, check

DEFAULT_REVERSALS = 5


class ReversalError(CircuitError):
    pass


@dataclass(frozen=True)
class Variant:
    gate_index: int
    circuit: Circuit


@dataclass(frozen=True)
class ReversalSuite:
    original: Circuit
    variants: tuple[Variant, ...]
    amplification: int
    include_rz: bool
    skipped: tuple[tuple[int, str], ...]  # (op index, reason)

    def __len__(self) -> int:
        return len(self.variants)

    @property
    def gate_indices(self) -> list[int]:
        return [v.gate_index for v in self.variants]


def eligible_gate_indices(circuit: Circuit, include_rz: bool = False) -> list[int]:
    return [
        i for i, op in enumerate(circuit.ops)
        if op.kind.is_physical or (include_rz and op.kind is GateKind.RZ)
    ]


def _skip_reason(op: GateOp) -> str:
    if op.kind is GateKind.RZ:
        return "rz-virtual"
    return op.kind.value


def _full_barrier(n: int) -> GateOp:
    return barrier(*range(n), origin=Origin.INSERTED_REVERSE)


def _reversed_block(gates: list[GateOp], r: int, n: int) -> list[GateOp]:
    undo = [replace(adjoint_of(g), origin=Origin.INSERTED_REVERSE) for g in reversed(gates)]
    redo = [replace(g, origin=Origin.INSERTED_FORWARD) for g in gates]
    return [_full_barrier(n), *((undo + redo) * r), _full_barrier(n)]


def _check_r(r: int):
    if int(r) != r or r < 1:
        raise ReversalError(f"amplification must be a positive integer, got {r}")


def insert_reversal(circuit: Circuit, gate_index: int, r: int = DEFAULT_REVERSALS) -> Circuit:
    """Insert r barrier-fenced (adjoint, original) pairs right after one gate."""
    _check_r(r)
    check(circuit)
    if not 0 <= gate_index < len(circuit.ops) or not circuit.ops[gate_index].kind.is_unitary:
        raise ReversalError(f"op {gate_index} is not an eligible gate")
    ops = list(circuit.ops)
    block = _reversed_block([ops[gate_index]], r, circuit.num_qubits)
    return circuit.with_ops(ops[: gate_index + 1] + block + ops[gate_index + 1:])


def generate_suite(
    circuit: Circuit, r: int = DEFAULT_REVERSALS, include_rz: bool = False
) -> ReversalSuite:
    _check_r(r)
    check(circuit)
    eligible = eligible_gate_indices(circuit, include_rz)
    chosen = set(eligible)
    variants = tuple(Variant(i, insert_reversal(circuit, i, r)) for i in eligible)
    skipped = tuple(
        (i, _skip_reason(op)) for i, op in enumerate(circuit.ops) if i not in chosen
    )
    return ReversalSuite(circuit, variants, r, include_rz, skipped)


def insert_group_reversal(
    circuit: Circuit, indices: Iterable[int], r: int = DEFAULT_REVERSALS
) -> Circuit:
    """Reverse a set of gates together, right after the last member.

    Members must be unitary ops, and no other op touching a member's qubit
    may sit between the first and last member.
    """
    _check_r(r)
    check(circuit)
    members = sorted(set(indices))
    if not members:
        raise ReversalError("group is empty")
    for i in members:
        if not 0 <= i < len(circuit.ops) or not circuit.ops[i].kind.is_unitary:
            raise ReversalError(f"op {i} is not an eligible gate")
    member_set = set(members)
    qubits = {q for i in members for q in circuit.ops[i].qubits}
    for j in range(members[0], members[-1]):
        if j not in member_set and qubits.intersection(circuit.ops[j].qubits):
            raise ReversalError(
                f"group is not contiguous: op {j} ({circuit.ops[j]}) interleaves its members"
            )
    ops = list(circuit.ops)
    block = _reversed_block([ops[i] for i in members], r, circuit.num_qubits)
    last = members[-1]
    return circuit.with_ops(ops[: last + 1] + block + ops[last + 1:])
