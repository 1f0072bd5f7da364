"""Deterministic benchmark circuits decomposed into {RZ, SX, X, CX}."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .circuit import Circuit, GateOp, cx, rz, sx, x

TWO_PI = 2.0 * math.pi


def h_ops(q: int) -> list[GateOp]:
    """Hadamard as RZ(pi/2) SX RZ(pi/2), equal up to global phase."""
    return [rz(math.pi / 2, q), sx(q), rz(math.pi / 2, q)]


def cp_ops(theta: float, control: int, target: int) -> list[GateOp]:
    """Controlled phase as RZ(t/2)_c RZ(t/2)_t CX RZ(-t/2)_t CX."""
    return [
        rz(theta / 2, control),
        rz(theta / 2, target),
        cx(control, target),
        rz(-theta / 2, target),
        cx(control, target),
    ]


def rzz_ops(theta: float, a: int, b: int) -> list[GateOp]:
    """exp(-i theta/2 Z_a Z_b)."""
    return [cx(a, b), rz(theta, b), cx(a, b)]


def rx_ops(theta: float, q: int) -> list[GateOp]:
    """exp(-i theta/2 X) = H RZ(theta) H with the inner RZs merged."""
    return [rz(math.pi / 2, q), sx(q), rz(math.pi + theta, q), sx(q), rz(math.pi / 2, q)]


def swap_ops(a: int, b: int) -> list[GateOp]:
    return [cx(a, b), cx(b, a), cx(a, b)]


def _check_bits(target: str, n: int):
    if len(target) != n or set(target) - {"0", "1"}:
        raise ValueError(f"target must be a {n}-character bitstring, got {target!r}")


def qft_ops(n: int) -> list[GateOp]:
    """The DFT on n qubits (little-endian), final swaps included."""
    ops: list[GateOp] = []
    for j in reversed(range(n)):
        ops += h_ops(j)
        for k in reversed(range(j)):
            ops += cp_ops(math.pi / 2 ** (j - k), j, k)
    for q in range(n // 2):
        ops += swap_ops(q, n - 1 - q)
    return ops


def qft_input_ops(n: int, target: str) -> list[GateOp]:
    """Prepare the state the QFT maps onto |target>.

    That state is a product: qubit q carries H then a phase of
    -2*pi*t*2^q/2^n (t = int(target)). Zero phases are omitted, so the prefix
    shape depends on the input.
    """
    _check_bits(target, n)
    t = int(target, 2)
    ops: list[GateOp] = []
    for q in range(n):
        ops += h_ops(q)
        phase = math.remainder(-TWO_PI * t * 2**q / 2**n, TWO_PI)
        if abs(phase) > 1e-12:
            ops.append(rz(phase, q))
    return ops


def qft_circuit(n: int, target: str) -> Circuit:
    """Input preparation + QFT; the ideal output is exactly `target`."""
    if n < 1:
        raise ValueError("QFT needs at least one qubit")
    ops = qft_input_ops(n, target) + qft_ops(n)
    return Circuit(n, tuple(ops)).measure_all()


def qft_input_indices(n: int, target: str) -> list[int]:
    """Op indices of the input-preparation prefix inside qft_circuit(n, target)."""
    return list(range(len(qft_input_ops(n, target))))


def ghz_circuit(n: int) -> Circuit:
    if n < 2:
        raise ValueError("GHZ needs at least two qubits")
    ops = h_ops(0) + [cx(q, q + 1) for q in range(n - 1)]
    return Circuit(n, tuple(ops)).measure_all()


def tfim_step_ops(n: int, theta_zz: float, theta_x: float) -> list[GateOp]:
    ops: list[GateOp] = []
    for q in range(n - 1):
        ops += rzz_ops(theta_zz, q, q + 1)
    for q in range(n):
        ops += rx_ops(theta_x, q)
    return ops


def tfim_circuit(n: int, steps: int = 1, theta_zz: float = 0.4, theta_x: float = 0.3) -> Circuit:
    """Trotterised transverse-field Ising evolution on a line of n spins."""
    if n < 2 or steps < 1:
        raise ValueError("TFIM needs n >= 2 and steps >= 1")
    ops = []
    for _ in range(steps):
        ops += tfim_step_ops(n, theta_zz, theta_x)
    return Circuit(n, tuple(ops)).measure_all()


def crosstalk_circuit(n: int = 3, rounds: int = 2) -> Circuit:
    """Parallel X layers on every qubit of a line; the ideal output is all zeros.

    Every gate has a busy coupled neighbour in its layer, which makes this the
    worst case for layer crosstalk and the best case for serialization.
    """
    if n < 2 or rounds < 1:
        raise ValueError("crosstalk benchmark needs n >= 2 and rounds >= 1")
    ops = [x(q) for _ in range(2 * rounds) for q in range(n)]
    return Circuit(n, tuple(ops)).measure_all()


@dataclass(frozen=True)
class BenchSpec:
    family: str
    n: int
    params: dict = field(default_factory=dict)

    def build(self) -> Circuit:
        family = self.family.lower()
        if family == "qft":
            return qft_circuit(self.n, self.params.get("target", "0" * self.n))
        if family == "ghz":
            return ghz_circuit(self.n)
        if family == "tfim":
            return tfim_circuit(self.n, **self.params)
        if family == "crosstalk":
            return crosstalk_circuit(self.n, **self.params)
        raise ValueError(f"unknown benchmark family {self.family!r}")
