"""
Statevector executor: exact ideal probabilities and Monte Carlo trajectories.

Trajectories are batched: a (batch, 2**n) array of statevectors is pushed
through the layered circuit, and every stochastic channel is unravelled per
row (Pauli jumps for depolarizing, quantum jumps for amplitude damping,
Z flips for dephasing). Readout flips act on the sampled classical bits.
"""
from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .circuit import (
    PAULIS,
    Circuit,
    GateKind,
    GateOp,
    LayerSchedule,
    check,
    compute_layers,
    gate_matrix,
)
from .noise import NoiseModel
from .reversal import ReversalSuite

MAX_SIM_QUBITS = 20
_BATCH_AMPLITUDES = 1 << 21
_U64 = (1 << 64) - 1


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Distribution:
    """Bitstring -> probability; bit 0 is the rightmost character. shots=0 means exact."""

    probs: Mapping[str, float]
    shots: int = 0

    @property
    def num_bits(self) -> int:
        return len(next(iter(self.probs))) if self.probs else 0

    def __getitem__(self, key: str) -> float:
        return self.probs.get(key, 0.0)

    def support(self) -> list[str]:
        return sorted(k for k, p in self.probs.items() if p > 0)

    def to_dict(self) -> dict:
        return {"shots": self.shots, "probs": {k: self.probs[k] for k in sorted(self.probs)}}

    @classmethod
    def from_counts(cls, counts: Mapping[str, int]) -> Distribution:
        total = sum(counts.values())
        return cls({k: c / total for k, c in sorted(counts.items()) if c}, total)


def shot_noise_bound(shots: int, outcomes: int) -> float:
    """Slack for TVD between a sample of `shots` draws and its source.

    eps = 2 * sqrt(K / (2 * shots)) with K the number of distinct outcomes.
    Conservative: the expected TVD is roughly a third of this.
    """
    return 2.0 * math.sqrt(outcomes / (2.0 * shots))


def stable_hash64(key) -> int:
    return int.from_bytes(hashlib.blake2b(repr(key).encode(), digest_size=8).digest(), "little")


def derive_seed(seed: int, key) -> int:
    return (int(seed) ^ stable_hash64(key)) & _U64


# -- compiled execution plan -----------------------------------------------


def gate_error_probabilities(
    circuit: Circuit, model: NoiseModel, schedule: LayerSchedule | None = None
) -> list[float]:
    """Effective depolarizing probability per op, crosstalk included.

    A physical gate's probability is multiplied by crosstalk_factor when some
    other physical gate in the same layer acts on a coupled neighbour qubit.
    """
    schedule = schedule or compute_layers(circuit)
    nbrs = model.neighbours(circuit.num_qubits)
    busy: dict[int, dict[int, int]] = {}  # layer -> qubit -> op index
    for i, op in enumerate(circuit.ops):
        if op.kind.is_physical:
            for q in op.qubits:
                busy.setdefault(schedule.layer_of[i], {})[q] = i
    out = []
    for i, op in enumerate(circuit.ops):
        p = model.base_error(op)
        if p > 0:
            layer = busy.get(schedule.layer_of[i], {})
            crowded = any(
                layer.get(nb, i) != i for q in op.qubits for nb in nbrs[q]
            )
            if crowded:
                p = min(1.0, p * model.crosstalk_factor)
        out.append(p)
    return out


@dataclass
class _Step:
    gates: list[tuple[GateOp, float]]
    idle: list[tuple[int, float, float]]  # qubit, relaxation prob, phase-flip prob


def _measure_map(circuit: Circuit) -> list[tuple[int, int]]:
    meas = [(op.qubits[0], op.clbit) for op in circuit.ops if op.kind is GateKind.MEASURE]
    if not meas:
        meas = [(q, q) for q in range(circuit.num_qubits)]
    return meas


def _plan(circuit: Circuit, model: NoiseModel) -> list[_Step]:
    schedule = compute_layers(circuit)
    probs = gate_error_probabilities(circuit, model, schedule)
    steps: dict[int, _Step] = {}
    for i, op in enumerate(circuit.ops):
        if op.kind.is_unitary:
            steps.setdefault(schedule.layer_of[i], _Step([], [])).gates.append((op, probs[i]))
    plan = []
    for layer in sorted(steps):
        step = steps[layer]
        busy_time = {}
        for op, _ in step.gates:
            for q in op.qubits:
                busy_time[q] = model.duration(op)
        span = max(busy_time.values(), default=0.0)
        for q in range(circuit.num_qubits):
            d = span - busy_time.get(q, 0.0)
            gamma, pz = model.relaxation_prob(q, d), model.dephasing_prob(q, d)
            if gamma > 0 or pz > 0:
                # Z with probability pz/2 scales coherences by 1 - pz
                step.idle.append((q, gamma, pz / 2.0))
        plan.append(step)
    return plan


# -- batched statevector kernels -------------------------------------------


def _view(psi: np.ndarray, q: int) -> np.ndarray:
    b, dim = psi.shape
    return psi.reshape(b, dim >> (q + 1), 2, 1 << q)


def _apply_1q(psi: np.ndarray, m: np.ndarray, q: int) -> np.ndarray:
    v = _view(psi, q)
    if m.ndim == 2:
        v = np.einsum("ij,bhjl->bhil", m, v)
    else:
        v = np.einsum("bij,bhjl->bhil", m, v)
    return np.ascontiguousarray(v).reshape(psi.shape)


_CX_PERMS: dict[tuple[int, int, int], np.ndarray] = {}


def _cx_perm(c: int, t: int, n: int) -> np.ndarray:
    key = (c, t, n)
    if key not in _CX_PERMS:
        idx = np.arange(1 << n)
        _CX_PERMS[key] = np.where((idx >> c) & 1, idx ^ (1 << t), idx)
    return _CX_PERMS[key]


def _apply_gate(psi: np.ndarray, op: GateOp, n: int) -> np.ndarray:
    if op.kind is GateKind.CX:
        return psi[:, _cx_perm(op.qubits[0], op.qubits[1], n)]
    return _apply_1q(psi, gate_matrix(op), op.qubits[0])


def _depolarize(psi, op: GateOp, p: float, rng: np.random.Generator):
    hit = np.flatnonzero(rng.random(psi.shape[0]) < p)
    if hit.size == 0:
        return psi
    k = len(op.qubits)
    which = rng.integers(1, 4**k, size=hit.size)
    sub = psi[hit]
    paulis = np.stack(PAULIS)
    for j, q in enumerate(op.qubits):
        sub = _apply_1q(sub, paulis[(which >> (2 * j)) & 3], q)
    psi[hit] = sub
    return psi


def _relax(psi, q: int, gamma: float, rng: np.random.Generator):
    v = _view(psi, q)
    excited = np.sum(np.abs(v[:, :, 1, :]) ** 2, axis=(1, 2))
    jump = rng.random(psi.shape[0]) < gamma * excited
    v[jump, :, 0, :] = v[jump, :, 1, :]
    v[jump, :, 1, :] = 0
    v[~jump, :, 1, :] *= math.sqrt(1.0 - gamma)
    psi /= np.sqrt(np.sum(np.abs(psi) ** 2, axis=1, keepdims=True))
    return psi


def _phase_flip(psi, q: int, p: float, rng: np.random.Generator):
    flip = rng.random(psi.shape[0]) < p
    if flip.any():
        v = _view(psi, q)
        v[flip, :, 1, :] *= -1
    return psi


def _evolve(psi, plan: list[_Step], n: int, rng: np.random.Generator):
    for step in plan:
        for op, p in step.gates:
            psi = _apply_gate(psi, op, n)
            if p > 0:
                psi = _depolarize(psi, op, p, rng)
        for q, gamma, pz in step.idle:
            if gamma > 0:
                psi = _relax(psi, q, gamma, rng)
            if pz > 0:
                psi = _phase_flip(psi, q, pz, rng)
    return psi


def _clbits_of(indices: np.ndarray, meas: list[tuple[int, int]]) -> np.ndarray:
    out = np.zeros_like(indices)
    for q, c in meas:
        out = (out & ~(1 << c)) | (((indices >> q) & 1) << c)
    return out


def _to_key(value: int, nbits: int) -> str:
    return format(int(value), f"0{nbits}b") if nbits else ""


def _prepare(circuit: Circuit, model: NoiseModel | None):
    check(circuit)
    n = circuit.num_qubits
    if n > MAX_SIM_QUBITS:
        raise SimulationError(f"simulation supports at most {MAX_SIM_QUBITS} qubits, got {n}")
    if model is not None:
        for name in ("t1_ns", "t2_ns"):
            value = getattr(model, name)
            if not isinstance(value, float) and len(value) < n:
                raise SimulationError(f"{name} lists {len(value)} qubits, circuit has {n}")


def ideal_probabilities(circuit: Circuit) -> Distribution:
    """Exact measured-register distribution with all noise ignored."""
    _prepare(circuit, None)
    n = circuit.num_qubits
    psi = np.zeros((1, 1 << n), dtype=complex)
    psi[0, 0] = 1.0
    # program order and layer order give the same unitary
    for op in circuit.ops:
        if op.kind.is_unitary:
            psi = _apply_gate(psi, op, n)
    probs = np.abs(psi[0]) ** 2
    keys = _clbits_of(np.arange(1 << n), _measure_map(circuit))
    out: dict[str, float] = {}
    for key, p in zip(keys, probs):
        if p > 1e-14:
            s = _to_key(key, circuit.num_clbits)
            out[s] = out.get(s, 0.0) + float(p)
    total = sum(out.values())
    return Distribution({k: v / total for k, v in sorted(out.items())}, 0)


def run_noisy(circuit: Circuit, model: NoiseModel, shots: int, seed: int) -> Distribution:
    """Empirical distribution over `shots` noisy trajectories."""
    if shots < 1:
        raise SimulationError("shots must be positive")
    _prepare(circuit, model)
    n = circuit.num_qubits
    plan = _plan(circuit, model)
    meas = _measure_map(circuit)
    rng = np.random.default_rng(int(seed) & _U64)
    batch = max(1, min(shots, _BATCH_AMPLITUDES >> n))
    outcomes = []
    done = 0
    while done < shots:
        b = min(batch, shots - done)
        psi = np.zeros((b, 1 << n), dtype=complex)
        psi[:, 0] = 1.0
        psi = _evolve(psi, plan, n, rng)
        cum = np.cumsum(np.abs(psi) ** 2, axis=1)
        u = rng.random(b)[:, None] * cum[:, -1:]
        idx = np.minimum((cum < u).sum(axis=1), (1 << n) - 1)
        bits = _clbits_of(idx, meas)
        if model.readout_flip > 0:
            for _, c in meas:
                flip = rng.random(b) < model.readout_flip
                bits = bits ^ (flip.astype(bits.dtype) << c)
        outcomes.append(bits)
        done += b
    values, counts = np.unique(np.concatenate(outcomes), return_counts=True)
    counts_by_key = {_to_key(v, circuit.num_clbits): int(c) for v, c in zip(values, counts)}
    return Distribution.from_counts(counts_by_key)


ORIGINAL_KEY = "original"


@dataclass(frozen=True)
class SuiteResult:
    original: Distribution
    variants: tuple[tuple[int, Distribution], ...]

    def __len__(self) -> int:
        return 1 + len(self.variants)

    def by_gate(self) -> dict[int, Distribution]:
        return dict(self.variants)


def execute_suite(
    suite: ReversalSuite,
    model: NoiseModel,
    shots: int,
    seed: int,
    workers: int = 1,
) -> SuiteResult:
    """Run the original and every variant; each circuit gets its own derived seed."""
    jobs = [(ORIGINAL_KEY, suite.original)] + [(v.gate_index, v.circuit) for v in suite.variants]

    def run(job):
        key, circ = job
        return run_noisy(circ, model, shots, derive_seed(seed, key))

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            dists = list(pool.map(run, jobs))
    else:
        dists = [run(job) for job in jobs]
    variants = tuple((v.gate_index, d) for v, d in zip(suite.variants, dists[1:]))
    return SuiteResult(dists[0], variants)


def execute(circuit: Circuit, model: NoiseModel | None, shots: int, seed: int) -> Distribution:
    """Noisy run, or the exact distribution when model is None."""
    if model is None:
        return ideal_probabilities(circuit)
    return run_noisy(circuit, model, shots, seed)


__all__ = [
    "Distribution",
    "SimulationError",
    "SuiteResult",
    "derive_seed",
    "execute_suite",
    "gate_error_probabilities",
    "ideal_probabilities",
    "run_noisy",
    "shot_noise_bound",
]
