"""Impact scoring: TVD, Pearson correlation, and per-gate report analyses."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.special import betainc

from .circuit import Circuit, LayerSchedule, compute_layers
from .noise import NoiseModel
from .reversal import DEFAULT_REVERSALS, ReversalSuite, insert_group_reversal
from .sim import Distribution, SuiteResult, derive_seed, run_noisy

DEFAULT_THRESHOLDS = (0.05, 0.10, 0.25, 0.50)
ONE_QUBIT_PHYSICAL = ("SX", "SXdg", "X")


class AnalysisError(ValueError):
    pass


def tvd(p: Distribution | Mapping[str, float], q: Distribution | Mapping[str, float]) -> float:
    """Total variation distance: half the L1 distance over the union of outcomes."""
    pp = p.probs if isinstance(p, Distribution) else p
    qq = q.probs if isinstance(q, Distribution) else q
    widths = {len(k) for k in pp} | {len(k) for k in qq}
    if len(widths) > 1:
        raise AnalysisError(f"distributions are over different registers: widths {sorted(widths)}")
    total = math.fsum(abs(pp.get(k, 0.0) - qq.get(k, 0.0)) for k in set(pp) | set(qq))
    return min(1.0, 0.5 * total)


def pearson(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Sample correlation and its two-sided p-value from Student's t with n-2 dof."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise AnalysisError("pearson needs two equal-length 1-D sequences")
    n = x.size
    if n < 3:
        raise AnalysisError(f"pearson needs at least 3 points, got {n}")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise AnalysisError("pearson is undefined for a constant sequence")
    xm = x - x.mean()
    ym = y - y.mean()
    r = float(np.dot(xm, ym) / math.sqrt(np.dot(xm, xm) * np.dot(ym, ym)))
    r = max(-1.0, min(1.0, r))
    if 1.0 - r * r <= 0.0:
        return r, 0.0
    df = n - 2
    t2 = r * r * df / (1.0 - r * r)
    # P(|T| > t) = I_{df/(df+t^2)}(df/2, 1/2)
    return r, float(betainc(df / 2.0, 0.5, df / (df + t2)))


@dataclass(frozen=True)
class ImpactRecord:
    gate_index: int
    kind: str
    qubits: tuple[int, ...]
    layer: int
    tvd: float
    ideal_tvd: float | None = None


@dataclass
class ImpactReport:
    summary: dict
    amplification: int | None
    shots: int | None
    records: list[ImpactRecord]
    analyses: dict = field(default_factory=dict)

    @property
    def active_qubits(self) -> list[int]:
        return self.summary["active_qubits"]

    def to_dict(self) -> dict:
        return {
            "summary": self.summary,
            "amplification": self.amplification,
            "shots": self.shots,
            "records": [
                {**asdict(r), "qubits": list(r.qubits)} for r in self.records
            ],
            "analyses": self.analyses,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["gate_index", "kind", "qubits", "layer", "tvd"])
        for r in self.records:
            w.writerow([r.gate_index, r.kind, ";".join(map(str, r.qubits)), r.layer, repr(r.tvd)])
        return buf.getvalue()

    def plot_tracks(self) -> dict[int, str]:
        """Per-qubit CSV bar tracks (layer vs TVD); two-qubit gates appear on both qubits."""
        tracks = {}
        for q in self.active_qubits:
            rows = sorted(
                (r.layer, r.gate_index, r.kind, r.tvd) for r in self.records if q in r.qubits
            )
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["layer", "gate_index", "kind", "tvd"])
            for layer, gi, kind, value in rows:
                w.writerow([layer, gi, kind, repr(value)])
            tracks[q] = buf.getvalue()
        return tracks


def circuit_summary(circuit: Circuit, schedule: LayerSchedule | None = None) -> dict:
    schedule = schedule or compute_layers(circuit)
    return {
        "num_qubits": circuit.num_qubits,
        "active_qubits": list(circuit.active_qubits),
        "gate_counts": dict(sorted(circuit.count_ops().items())),
        "depth": schedule.num_layers,
    }


def _sort_records(records: Iterable[ImpactRecord]) -> list[ImpactRecord]:
    return sorted(records, key=lambda r: (-r.tvd, r.gate_index))


def build_report(
    original: Distribution,
    results: SuiteResult | Iterable[tuple[int, Distribution]],
    circuit: Circuit,
    schedule: LayerSchedule | None = None,
    *,
    suite: ReversalSuite | None = None,
    ideal: Distribution | None = None,
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
) -> ImpactReport:
    """Score every variant against the original run and fill in the analyses.

    With `suite`, a missing variant result is an error. With `ideal`, each
    record also carries TVD(ideal, variant) and the report gains the
    ideal-vs-original validation correlation.
    """
    schedule = schedule or compute_layers(circuit)
    pairs = list(results.variants if isinstance(results, SuiteResult) else results)
    by_gate = dict(pairs)
    if len(by_gate) != len(pairs):
        raise AnalysisError("duplicate variant results")
    if suite is not None:
        missing = [i for i in suite.gate_indices if i not in by_gate]
        if missing:
            raise AnalysisError(f"missing variant results for gates {missing}")
    records = []
    for gi, dist in pairs:
        op = circuit.ops[gi]
        records.append(ImpactRecord(
            gate_index=gi,
            kind=op.label,
            qubits=op.qubits,
            layer=schedule.layer_of[gi],
            tvd=tvd(original, dist),
            ideal_tvd=None if ideal is None else tvd(ideal, dist),
        ))
    report = ImpactReport(
        summary=circuit_summary(circuit, schedule),
        amplification=suite.amplification if suite is not None else None,
        shots=original.shots,
        records=_sort_records(records),
    )
    report.analyses = run_analyses(report, thresholds)
    if ideal is not None:
        report.analyses["original_vs_ideal_tvd"] = tvd(original, ideal)
        report.analyses["validation_correlation"] = _guard(lambda: validation_correlation(report))
    return report


def _guard(fn):
    try:
        r, p = fn()
        return {"r": r, "p": p}
    except AnalysisError as exc:
        return {"error": str(exc)}


def run_analyses(report: ImpactReport, thresholds: Sequence[float] = DEFAULT_THRESHOLDS) -> dict:
    out: dict = {"positional_correlation": _guard(lambda: positional_correlation(report))}
    try:
        out["qubit_coverage"] = {
            f"{t:g}": v for t, v in qubit_coverage(report, thresholds).items()
        }
    except AnalysisError as exc:
        out["qubit_coverage"] = {"error": str(exc)}
    try:
        count, frac = one_vs_two_qubit(report)
        out["one_vs_two_qubit"] = {"count": count, "fraction": frac}
    except AnalysisError as exc:
        out["one_vs_two_qubit"] = {"error": str(exc)}
    return out


def positional_correlation(report: ImpactReport) -> tuple[float, float]:
    """Pearson correlation of gate layer against impact."""
    if len(report.records) < 3:
        raise AnalysisError("positional correlation needs at least 3 records")
    return pearson([r.layer for r in report.records], [r.tvd for r in report.records])


def validation_correlation(report: ImpactReport) -> tuple[float, float]:
    """Pearson correlation of TVD(ideal, variant) against TVD(original, variant)."""
    if any(r.ideal_tvd is None for r in report.records):
        raise AnalysisError("records carry no ideal TVDs")
    return pearson([r.ideal_tvd for r in report.records], [r.tvd for r in report.records])


def qubit_coverage(
    report: ImpactReport, thresholds: Sequence[float] = DEFAULT_THRESHOLDS
) -> dict[float, float]:
    """Fraction of active qubits touched by the top ceil(t * N) records, per threshold t."""
    if not report.records:
        raise AnalysisError("report has no records")
    active = set(report.active_qubits)
    if not active:
        raise AnalysisError("circuit has no active qubits")
    out = {}
    for t in thresholds:
        if not 0 < t <= 1:
            raise AnalysisError(f"threshold {t} outside (0, 1]")
        top = report.records[: max(1, math.ceil(t * len(report.records) - 1e-9))]
        touched = {q for r in top for q in r.qubits} & active
        out[t] = len(touched) / len(active)
    return out


def one_vs_two_qubit(report: ImpactReport) -> tuple[int, float]:
    """How many SX/X records beat the weakest CX record, and what fraction that is."""
    cx_tvds = [r.tvd for r in report.records if r.kind == "CX"]
    one_q = [r.tvd for r in report.records if r.kind in ONE_QUBIT_PHYSICAL]
    if not cx_tvds or not one_q:
        raise AnalysisError("need at least one CX record and one SX/X record")
    floor = min(cx_tvds)
    count = sum(1 for v in one_q if v > floor)
    return count, count / len(one_q)


def input_impact(
    inputs: Sequence[tuple[str, Circuit, Iterable[int]]],
    model: NoiseModel,
    shots: int,
    seed: int,
    r: int = DEFAULT_REVERSALS,
) -> list[tuple[str, float]]:
    """Rank inputs by the TVD their group-reversed input gates cause.

    Each entry is (label, circuit prepared for that input, indices of its
    input gates). All inputs share the same derived seeds so they are paired.
    """
    scored = []
    for label, circuit, indices in inputs:
        variant = insert_group_reversal(circuit, indices, r)
        base = run_noisy(circuit, model, shots, derive_seed(seed, "original"))
        rev = run_noisy(variant, model, shots, derive_seed(seed, "group"))
        scored.append((label, tvd(base, rev)))
    return sorted(scored, key=lambda item: -item[1])
