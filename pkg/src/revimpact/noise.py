"""Noise model: gate depolarizing, T1/T2 idling, readout flips, layer crosstalk."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

from .circuit import GateKind, GateOp


class NoiseModelError(ValueError):
    pass


DEFAULT_DURATIONS_NS = {"sx": 35.0, "x": 35.0, "cx": 300.0, "measure": 1000.0}


def _per_qubit(value, q: int) -> float:
    if isinstance(value, (int, float)):
        return float(value)
    return float(value[q])


@dataclass(frozen=True)
class NoiseModel:
    """All defaults are representative superconducting-device magnitudes.

    ``t1_ns``/``t2_ns`` take a scalar or a per-qubit sequence; ``coupling``
    of None means a line topology over the circuit's qubits.
    """

    p1: float = 0.001
    p2: float = 0.01
    readout_flip: float = 0.02
    t1_ns: float | Sequence[float] = 100_000.0
    t2_ns: float | Sequence[float] = 80_000.0
    durations_ns: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_DURATIONS_NS))
    crosstalk_factor: float = 2.0
    coupling: frozenset[tuple[int, int]] | None = None

    def __post_init__(self):
        try:
            durations = {
                GateKind(str(k).lower()).value: float(v) for k, v in dict(self.durations_ns).items()
            }
        except ValueError as exc:
            raise NoiseModelError(f"bad durations_ns entry: {exc}") from None
        object.__setattr__(self, "durations_ns", durations)
        for name in ("t1_ns", "t2_ns"):
            value = getattr(self, name)
            if isinstance(value, (int, float)):
                object.__setattr__(self, name, float(value))
            else:
                object.__setattr__(self, name, tuple(float(v) for v in value))
        if self.coupling is not None:
            pairs = frozenset(tuple(sorted((int(a), int(b)))) for a, b in self.coupling)
            object.__setattr__(self, "coupling", pairs)
        problems = self.problems()
        if problems:
            raise NoiseModelError("; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        for name in ("p1", "p2", "readout_flip"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                out.append(f"{name}={v} outside [0, 1]")
        if not self.crosstalk_factor >= 1.0:
            out.append(f"crosstalk_factor={self.crosstalk_factor} must be >= 1")
        if self.durations_ns.get("rz", 0.0) != 0.0:
            out.append("rz duration must be 0")
        if any(d < 0 or math.isnan(d) for d in self.durations_ns.values()):
            out.append("durations must be non-negative")
        t1s = [self.t1_ns] if isinstance(self.t1_ns, float) else list(self.t1_ns)
        t2s = [self.t2_ns] if isinstance(self.t2_ns, float) else list(self.t2_ns)
        if any(not t > 0 for t in t1s + t2s):
            out.append("t1/t2 must be positive")
        if not isinstance(self.t1_ns, float) and not isinstance(self.t2_ns, float):
            if len(t1s) != len(t2s):
                out.append("per-qubit t1 and t2 lists differ in length")
        n = max(len(t1s), len(t2s))
        for q in range(n):
            t1 = t1s[q] if len(t1s) > 1 else t1s[0]
            t2 = t2s[q] if len(t2s) > 1 else t2s[0]
            if t2 > 2 * t1:
                out.append(f"t2 > 2*t1 on qubit {q}")
        if self.coupling is not None and any(a == b or a < 0 for a, b in self.coupling):
            out.append("coupling pairs must join two distinct non-negative qubits")
        return out

    @classmethod
    def ideal(cls) -> NoiseModel:
        return cls(
            p1=0.0, p2=0.0, readout_flip=0.0, t1_ns=math.inf, t2_ns=math.inf,
            crosstalk_factor=1.0,
        )

    def with_(self, **changes) -> NoiseModel:
        return replace(self, **changes)

    # -- derived quantities

    def duration(self, op: GateOp) -> float:
        if op.kind in (GateKind.RZ, GateKind.BARRIER):
            return 0.0
        return self.durations_ns.get(op.kind.value, 0.0)

    def base_error(self, op: GateOp) -> float:
        """Depolarizing probability before crosstalk; adjoints share the base rate."""
        if op.kind is GateKind.CX:
            return self.p2
        if op.kind in (GateKind.SX, GateKind.X):
            return self.p1
        return 0.0

    def t1(self, q: int) -> float:
        return _per_qubit(self.t1_ns, q)

    def t2(self, q: int) -> float:
        return _per_qubit(self.t2_ns, q)

    def relaxation_prob(self, q: int, d: float) -> float:
        """Amplitude-damping probability over an idle window of d ns."""
        if d <= 0:
            return 0.0
        return -math.expm1(-d / self.t1(q))

    def dephasing_prob(self, q: int, d: float) -> float:
        """Pure-dephasing probability 1 - exp(-d (1/T2 - 1/(2 T1)))."""
        if d <= 0:
            return 0.0
        rate = 1.0 / self.t2(q) - 1.0 / (2.0 * self.t1(q))
        return -math.expm1(-d * max(rate, 0.0))

    def neighbours(self, num_qubits: int) -> dict[int, set[int]]:
        pairs = self.coupling
        if pairs is None:
            pairs = {(q, q + 1) for q in range(num_qubits - 1)}
        out: dict[int, set[int]] = {q: set() for q in range(num_qubits)}
        for a, b in pairs:
            if a < num_qubits and b < num_qubits:
                out[a].add(b)
                out[b].add(a)
        return out

    # -- JSON

    def to_dict(self) -> dict:
        def enc(t):
            if isinstance(t, float):
                return None if math.isinf(t) else t
            return [None if math.isinf(v) else v for v in t]

        return {
            "p1": self.p1,
            "p2": self.p2,
            "readout_flip": self.readout_flip,
            "t1_ns": enc(self.t1_ns),
            "t2_ns": enc(self.t2_ns),
            "durations_ns": dict(sorted(self.durations_ns.items())),
            "crosstalk_factor": self.crosstalk_factor,
            "coupling": None if self.coupling is None else [list(p) for p in sorted(self.coupling)],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> NoiseModel:
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise NoiseModelError(f"unknown noise model fields: {sorted(unknown)}")
        kwargs = dict(data)

        def dec(t):
            if t is None:
                return math.inf
            if isinstance(t, (int, float)):
                return float(t)
            return [math.inf if v is None else float(v) for v in t]

        for name in ("t1_ns", "t2_ns"):
            if name in kwargs:
                kwargs[name] = dec(kwargs[name])
        if "durations_ns" in kwargs:
            kwargs["durations_ns"] = {**DEFAULT_DURATIONS_NS, **kwargs["durations_ns"]}
        try:
            return cls(**kwargs)
        except (TypeError, KeyError) as exc:
            raise NoiseModelError(str(exc)) from None

    @classmethod
    def load(cls, path) -> NoiseModel:
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise NoiseModelError(f"{path}: {exc}") from None
        if not isinstance(data, dict):
            raise NoiseModelError(f"{path}: expected a JSON object")
        return cls.from_dict(data)
