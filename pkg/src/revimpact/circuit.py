"""
Circuit IR for the {RZ, SX, X, CX} basis plus barriers and measurements.

Contains:
    - GateKind / Origin enums
    - GateOp: one immutable instruction
    - Circuit: qubit count + ordered ops
    - validate, adjoint_of, compute_layers, unitary_of, equivalent_up_to_phase

Qubit ordering is little-endian: qubit 0 is the least-significant bit of a
basis-state index and the rightmost character of a bitstring.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping

import numpy as np


class GateKind(str, Enum):
    RZ = "rz"
    SX = "sx"
    X = "x"
    CX = "cx"
    BARRIER = "barrier"
    MEASURE = "measure"

    @property
    def arity(self) -> int | None:
        """Fixed qubit count, or None for barriers (one or more)."""
        if self is GateKind.CX:
            return 2
        if self is GateKind.BARRIER:
            return None
        return 1

    @property
    def is_unitary(self) -> bool:
        return self not in (GateKind.BARRIER, GateKind.MEASURE)

    @property
    def is_physical(self) -> bool:
        # RZ is a virtual frame change, never pulsed
        return self in (GateKind.SX, GateKind.X, GateKind.CX)


class Origin(str, Enum):
    ORIGINAL = "original"
    INSERTED_REVERSE = "inserted_reverse"
    INSERTED_FORWARD = "inserted_forward"
    MITIGATION_BARRIER = "mitigation_barrier"


@dataclass(frozen=True)
class GateOp:
    kind: GateKind
    qubits: tuple[int, ...]
    theta: float | None = None
    adjoint: bool = False
    origin: Origin = Origin.ORIGINAL
    clbit: int | None = None  # MEASURE only; defaults to the qubit index

    def __post_init__(self):
        object.__setattr__(self, "kind", GateKind(self.kind))
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if self.theta is not None:
            object.__setattr__(self, "theta", float(self.theta))
        if self.kind is GateKind.MEASURE and self.clbit is None and len(self.qubits) == 1:
            object.__setattr__(self, "clbit", self.qubits[0])

    @property
    def label(self) -> str:
        return self.kind.name + ("dg" if self.adjoint else "")

    def same_instruction(self, other: GateOp, tol: float = 0.0) -> bool:
        """Equality ignoring the origin tag; angles compared within tol."""
        if (self.kind, self.qubits, self.adjoint, self.clbit) != (
            other.kind, other.qubits, other.adjoint, other.clbit
        ):
            return False
        if self.theta is None or other.theta is None:
            return self.theta is other.theta
        return abs(self.theta - other.theta) <= tol

    def __str__(self) -> str:
        args = f"({self.theta:.6g})" if self.theta is not None else ""
        return f"{self.label}{args}{list(self.qubits)}"


def rz(theta: float, q: int) -> GateOp:
    return GateOp(GateKind.RZ, (q,), theta=theta)


def sx(q: int, adjoint: bool = False) -> GateOp:
    return GateOp(GateKind.SX, (q,), adjoint=adjoint)


def x(q: int) -> GateOp:
    return GateOp(GateKind.X, (q,))


def cx(control: int, target: int) -> GateOp:
    return GateOp(GateKind.CX, (control, target))


def barrier(*qubits: int, origin: Origin = Origin.ORIGINAL) -> GateOp:
    return GateOp(GateKind.BARRIER, tuple(qubits), origin=origin)


def measure(q: int, c: int | None = None) -> GateOp:
    return GateOp(GateKind.MEASURE, (q,), clbit=q if c is None else c)


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    ops: tuple[GateOp, ...] = ()
    num_clbits: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        if self.num_clbits is None:
            object.__setattr__(self, "num_clbits", self.num_qubits)

    def __len__(self) -> int:
        return len(self.ops)

    def __iter__(self):
        return iter(self.ops)

    def __getitem__(self, i):
        return self.ops[i]

    def with_ops(self, ops: Iterable[GateOp]) -> Circuit:
        return replace(self, ops=tuple(ops))

    def measure_all(self) -> Circuit:
        """Append a measurement of every qubit into the same-index bit."""
        return self.with_ops(self.ops + tuple(measure(q) for q in range(self.num_qubits)))

    def without_measurements(self) -> Circuit:
        return self.with_ops(op for op in self.ops if op.kind is not GateKind.MEASURE)

    def same_ops(self, other: Circuit, tol: float = 0.0) -> bool:
        if self.num_qubits != other.num_qubits or len(self.ops) != len(other.ops):
            return False
        return all(a.same_instruction(b, tol) for a, b in zip(self.ops, other.ops))

    def count_ops(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for op in self.ops:
            counts[op.label] = counts.get(op.label, 0) + 1
        return counts

    @property
    def active_qubits(self) -> tuple[int, ...]:
        """Qubits touched by at least one unitary op."""
        return tuple(sorted({q for op in self.ops if op.kind.is_unitary for q in op.qubits}))


class CircuitError(ValueError):
    pass


def validate(circuit: Circuit) -> list[str]:
    """Return every invariant violation, each naming its op index."""
    problems = []
    n = circuit.num_qubits
    if n < 1:
        problems.append("circuit must have at least one qubit")
    measured: set[int] = set()
    for i, op in enumerate(circuit.ops):
        arity = op.kind.arity
        if arity is not None and len(op.qubits) != arity:
            problems.append(f"{op.kind.name} expects {arity} qubit(s) at op {i}")
        if op.kind is GateKind.BARRIER and not op.qubits:
            problems.append(f"empty barrier at op {i}")
        if len(set(op.qubits)) != len(op.qubits):
            problems.append(f"repeated qubit at op {i}")
        if any(q < 0 or q >= n for q in op.qubits):
            problems.append(f"qubit index out of range at op {i}")
        if (op.theta is None) == (op.kind is GateKind.RZ):
            problems.append(f"{op.kind.name} has wrong parameter count at op {i}")
        elif op.theta is not None and not math.isfinite(op.theta):
            problems.append(f"non-finite angle at op {i}")
        if op.adjoint and op.kind in (GateKind.BARRIER, GateKind.MEASURE):
            problems.append(f"adjoint flag on {op.kind.name} at op {i}")
        if op.kind is GateKind.MEASURE:
            if op.clbit is None or not 0 <= op.clbit < circuit.num_clbits:
                problems.append(f"classical bit out of range at op {i}")
            measured.update(op.qubits)
        elif op.kind.is_unitary and measured.intersection(op.qubits):
            problems.append(f"gate after measurement on the same qubit at op {i}")
    return problems


def check(circuit: Circuit) -> Circuit:
    problems = validate(circuit)
    if problems:
        raise CircuitError("; ".join(problems))
    return circuit


def adjoint_of(op: GateOp) -> GateOp:
    """The op implementing the Hermitian adjoint of `op`'s unitary."""
    if op.kind is GateKind.RZ:
        return replace(op, theta=-op.theta, adjoint=False)
    if op.kind is GateKind.SX:
        return replace(op, adjoint=not op.adjoint)
    if op.kind in (GateKind.X, GateKind.CX):
        return op
    raise CircuitError(f"{op.kind.name} has no adjoint")


# -- scheduling -------------------------------------------------------------


@dataclass(frozen=True)
class LayerSchedule:
    layer_of: tuple[int, ...]
    num_layers: int
    layer_duration: Mapping[int, float] = field(default_factory=dict)

    def layers(self) -> dict[int, list[int]]:
        """Layer number -> op indices in original order."""
        out: dict[int, list[int]] = {}
        for i, layer in enumerate(self.layer_of):
            out.setdefault(layer, []).append(i)
        return out


def compute_layers(circuit: Circuit, model=None) -> LayerSchedule:
    """ASAP layering. Barriers take a layer of their own and fence their qubits.

    Measurements get layers too but do not count towards num_layers.
    `model` is anything with a `duration(op)` method (a NoiseModel).
    """
    check(circuit)
    level = [-1] * circuit.num_qubits
    layer_of = []
    for op in circuit.ops:
        layer = 1 + max(level[q] for q in op.qubits)
        for q in op.qubits:
            level[q] = layer
        layer_of.append(layer)
    gate_layers = [l for l, op in zip(layer_of, circuit.ops) if op.kind is not GateKind.MEASURE]
    num_layers = 1 + max(gate_layers) if gate_layers else 0
    durations: dict[int, float] = {}
    for layer, op in zip(layer_of, circuit.ops):
        d = model.duration(op) if model is not None else 0.0
        durations[layer] = max(durations.get(layer, 0.0), d)
    return LayerSchedule(tuple(layer_of), num_layers, durations)


# -- matrices ---------------------------------------------------------------

I2 = np.eye(2, dtype=complex)
X_MAT = np.array([[0, 1], [1, 0]], dtype=complex)
Y_MAT = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z_MAT = np.array([[1, 0], [0, -1]], dtype=complex)
SX_MAT = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=complex)
# basis index = b_control + 2*b_target
CX_MAT = np.array(
    [[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex
)
PAULIS = (I2, X_MAT, Y_MAT, Z_MAT)


def rz_matrix(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def gate_matrix(op: GateOp) -> np.ndarray:
    """Matrix of a unitary op, ordered little-endian over op.qubits."""
    if op.kind is GateKind.RZ:
        return rz_matrix(op.theta)
    if op.kind is GateKind.SX:
        return SX_MAT.conj().T if op.adjoint else SX_MAT
    if op.kind is GateKind.X:
        return X_MAT
    if op.kind is GateKind.CX:
        return CX_MAT
    raise CircuitError(f"{op.kind.name} has no matrix")


MAX_UNITARY_QUBITS = 10


def _embed_1q(m: np.ndarray, q: int, n: int) -> np.ndarray:
    # kron runs from the most-significant qubit (n-1) down to qubit 0
    out = np.ones((1, 1), dtype=complex)
    for k in reversed(range(n)):
        out = np.kron(out, m if k == q else I2)
    return out


def _embed_cx(c: int, t: int, n: int) -> np.ndarray:
    p0 = np.diag([1, 0]).astype(complex)
    p1 = np.diag([0, 1]).astype(complex)
    return _embed_1q(p0, c, n) + _embed_1q(p1, c, n) @ _embed_1q(X_MAT, t, n)


def unitary_of(circuit: Circuit) -> np.ndarray:
    """Full 2^n x 2^n unitary; barriers are identity, measurements rejected."""
    n = circuit.num_qubits
    if n > MAX_UNITARY_QUBITS:
        raise CircuitError(f"unitary_of supports at most {MAX_UNITARY_QUBITS} qubits, got {n}")
    check(circuit)
    u = np.eye(2**n, dtype=complex)
    for op in circuit.ops:
        if op.kind is GateKind.MEASURE:
            raise CircuitError("unitary_of does not accept measurements")
        if op.kind is GateKind.BARRIER:
            continue
        if op.kind is GateKind.CX:
            g = _embed_cx(op.qubits[0], op.qubits[1], n)
        else:
            g = _embed_1q(gate_matrix(op), op.qubits[0], n)
        u = g @ u
    return u


def equivalent_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    k = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(b[k]) == 0:
        return bool(np.max(np.abs(a), initial=0.0) <= tol)
    c = a[k] / b[k]
    if abs(c) == 0:
        return False
    c /= abs(c)
    return bool(np.max(np.abs(a - c * b)) <= tol)
