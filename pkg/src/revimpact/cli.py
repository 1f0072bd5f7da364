"""Command-line pipeline: bench -> transform/analyze -> mitigate.

Exit codes: 0 success, 2 usage or validation error, 3 execution failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .analysis import AnalysisError, ImpactRecord, ImpactReport, build_report
from .bench import BenchSpec
from .circuit import CircuitError, compute_layers
from .mitigation import evaluate_mitigation, select_target_layers, serialize_layers
from .noise import NoiseModel, NoiseModelError
from .qasm import QasmError, emit_qasm, read_qasm
from .reversal import DEFAULT_REVERSALS, generate_suite, insert_group_reversal, insert_reversal
from .sim import SimulationError, derive_seed, execute_suite, ideal_probabilities, run_noisy

EXIT_OK, EXIT_USAGE, EXIT_EXEC = 0, 2, 3
DEFAULT_SHOTS = 32_000


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    input: str
    reversals: int = DEFAULT_REVERSALS
    shots: int = DEFAULT_SHOTS
    seed: int = 0
    include_rz: bool = False
    noise: str = "default"
    out: str = "."
    formats: list[str] = field(default_factory=lambda: ["json", "csv", "tracks"])
    extended_gates: bool = False
    validate: bool = False

    def check(self):
        if self.reversals < 1:
            raise UsageError("--reversals must be >= 1")
        if self.shots < 1:
            raise UsageError("--shots must be >= 1")
        if self.seed < 0:
            raise UsageError("--seed must be a non-negative integer")
        bad = set(self.formats) - {"json", "csv", "tracks"}
        if bad:
            raise UsageError(f"unknown report formats {sorted(bad)}")


def load_model(spec: str) -> NoiseModel:
    if spec == "ideal":
        return NoiseModel.ideal()
    if spec == "default":
        return NoiseModel()
    return NoiseModel.load(spec)


def _write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _config_from(args) -> RunConfig:
    cfg = RunConfig(
        input=args.input,
        reversals=args.reversals,
        shots=args.shots,
        seed=args.seed,
        include_rz=args.include_rz,
        noise=args.noise,
        out=args.out,
        extended_gates=args.extended_gates,
    )
    if hasattr(args, "formats"):
        cfg.formats = [f for f in args.formats.split(",") if f]
    if hasattr(args, "validate"):
        cfg.validate = args.validate
    cfg.check()
    return cfg


def analyze(cfg: RunConfig, workers: int = 1) -> tuple[ImpactReport, dict]:
    """Run the whole reversal pipeline for one circuit; returns the report and its JSON body."""
    circuit = read_qasm(cfg.input, extended=cfg.extended_gates)
    model = load_model(cfg.noise)
    schedule = compute_layers(circuit, model)
    suite = generate_suite(circuit, cfg.reversals, cfg.include_rz)
    results = execute_suite(suite, model, cfg.shots, cfg.seed, workers=workers)
    ideal = ideal_probabilities(circuit) if cfg.validate else None
    report = build_report(
        results.original, results, circuit, schedule, suite=suite, ideal=ideal
    )
    body = {
        "tool": "revimpact",
        "version": __version__,
        "created": _timestamp(),
        "config": asdict(cfg),
        "noise_model": model.to_dict(),
        "skipped": [{"gate_index": i, "reason": why} for i, why in suite.skipped],
        "original_distribution": results.original.to_dict(),
        **report.to_dict(),
    }
    return report, body


def report_from_dict(body: dict) -> ImpactReport:
    records = [
        ImpactRecord(
            gate_index=r["gate_index"], kind=r["kind"], qubits=tuple(r["qubits"]),
            layer=r["layer"], tvd=r["tvd"], ideal_tvd=r.get("ideal_tvd"),
        )
        for r in body["records"]
    ]
    return ImpactReport(
        body["summary"], body.get("amplification"), body.get("shots"), records,
        body.get("analyses", {}),
    )


def write_report(cfg: RunConfig, report: ImpactReport, body: dict):
    out = Path(cfg.out)
    if "json" in cfg.formats:
        _write_atomic(out / "report.json", _dump(body))
    if "csv" in cfg.formats:
        _write_atomic(out / "report.csv", report.to_csv())
    if "tracks" in cfg.formats:
        for q, text in report.plot_tracks().items():
            _write_atomic(out / "tracks" / f"track_q{q}.csv", text)


# -- subcommands -----------------------------------------------------------


def cmd_analyze(args) -> int:
    cfg = _config_from(args)
    report, body = analyze(cfg, workers=args.workers)
    write_report(cfg, report, body)
    top = report.records[:5]
    for r in top:
        print(f"gate {r.gate_index:4d} {r.kind:5s} q{list(r.qubits)} layer {r.layer:3d} tvd {r.tvd:.4f}")
    return EXIT_OK


def _parse_group(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad group spec {text!r}; expected comma-separated op indices") from None


def cmd_transform(args) -> int:
    circuit = read_qasm(args.input, extended=args.extended_gates)
    if args.reversals < 1:
        raise UsageError("--reversals must be >= 1")
    out = Path(args.out)
    written = []
    if args.group:
        members = _parse_group(args.group)
        variant = insert_group_reversal(circuit, members, args.reversals)
        name = "group_" + "-".join(str(i) for i in sorted(set(members))) + ".qasm"
        written.append((out / name, variant))
    elif args.gate_index is not None:
        written.append((out / f"variant_g{args.gate_index}.qasm",
                        insert_reversal(circuit, args.gate_index, args.reversals)))
    else:
        suite = generate_suite(circuit, args.reversals, args.include_rz)
        written += [(out / f"variant_g{v.gate_index}.qasm", v.circuit) for v in suite.variants]
    for path, variant in written:
        _write_atomic(path, emit_qasm(variant, extended=args.extended_gates))
        print(path)
    return EXIT_OK


def cmd_mitigate(args) -> int:
    if args.top_k < 1:
        raise UsageError("--top-k must be >= 1")
    if args.seed_batch < 1:
        raise UsageError("--seed-batch must be >= 1")
    cfg = _config_from(args)
    circuit = read_qasm(cfg.input, extended=cfg.extended_gates)
    model = load_model(cfg.noise)
    if args.report:
        with open(args.report) as fh:
            report = report_from_dict(json.load(fh))
    else:
        report, _ = analyze(cfg, workers=args.workers)
    layers = select_target_layers(report, args.top_k)
    mitigated, plan = serialize_layers(circuit, layers)
    reference = ideal_probabilities(circuit)
    runs = []
    for b in range(args.seed_batch):
        seed = derive_seed(cfg.seed, ("mitigate", b))
        before, after = evaluate_mitigation(circuit, mitigated, model, cfg.shots, seed, reference)
        runs.append({"seed": seed, "tvd_before": before, "tvd_after": after})
    mean_before = sum(r["tvd_before"] for r in runs) / len(runs)
    mean_after = sum(r["tvd_after"] for r in runs) / len(runs)
    summary = {
        "tool": "revimpact",
        "version": __version__,
        "created": _timestamp(),
        "config": {**asdict(cfg), "top_k": args.top_k, "seed_batch": args.seed_batch,
                   "report": args.report},
        "noise_model": model.to_dict(),
        "plan": plan.to_dict(),
        "tvd_before": mean_before,
        "tvd_after": mean_after,
        "runs": runs,
    }
    out = Path(cfg.out)
    _write_atomic(out / "mitigated.qasm", emit_qasm(mitigated, extended=cfg.extended_gates))
    _write_atomic(out / "mitigation.json", _dump(summary))
    print(f"layers {sorted(layers)}: tvd_before {mean_before:.4f} tvd_after {mean_after:.4f}")
    return EXIT_OK


def cmd_bench(args) -> int:
    params: dict = {}
    family = args.family
    if family == "qft":
        params["target"] = args.target if args.target is not None else "0" * args.n
    elif family == "tfim":
        params.update(steps=args.steps, theta_zz=args.theta_zz, theta_x=args.theta_x)
    elif family == "crosstalk":
        params["rounds"] = args.rounds
    try:
        circuit = BenchSpec(family, args.n, params).build()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    text = emit_qasm(circuit, extended=args.extended_gates)
    if args.out:
        _write_atomic(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_simulate(args) -> int:
    circuit = read_qasm(args.input, extended=args.extended_gates)
    if args.shots < 1:
        raise UsageError("--shots must be >= 1")
    if args.exact:
        dist = ideal_probabilities(circuit)
    else:
        dist = run_noisy(circuit, load_model(args.noise), args.shots, args.seed)
    lines = ["bitstring,probability"] + [f"{k},{p!r}" for k, p in sorted(dist.probs.items())]
    text = "\n".join(lines) + "\n"
    if args.out:
        _write_atomic(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- argument parsing -------------------------------------------------------


def _common(p: argparse.ArgumentParser, run: bool = True):
    p.add_argument("input", help="OpenQASM 2.0 circuit file")
    p.add_argument("--extended-gates", action="store_true", help="read/write sxdg directly")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--reversals", type=int, default=DEFAULT_REVERSALS, help="reversed pairs per gate")
    p.add_argument("--include-rz", action="store_true", help="also reverse virtual RZ gates")
    if run:
        p.add_argument("--shots", type=int, default=DEFAULT_SHOTS)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--noise", default="default", help="noise JSON path, 'ideal', or 'default'")
        p.add_argument("--workers", type=int, default=1, help="threads for variant execution")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="revimpact", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="score every gate by its reversal TVD")
    _common(p)
    p.add_argument("--formats", default="json,csv,tracks")
    p.add_argument("--validate", action="store_true",
                   help="also score variants against the exact ideal distribution")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("transform", help="emit reversal variants as QASM")
    _common(p, run=False)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--gate-index", type=int)
    g.add_argument("--group", help="comma-separated op indices reversed together")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("mitigate", help="serialize the layers of the top-k gates")
    _common(p)
    p.add_argument("--top-k", type=int, default=1)
    p.add_argument("--report", help="existing report.json (otherwise analyze inline)")
    p.add_argument("--seed-batch", type=int, default=1, help="paired seeds to average over")
    p.set_defaults(func=cmd_mitigate)

    p = sub.add_parser("bench", help="write a benchmark circuit")
    p.add_argument("family", choices=["qft", "ghz", "tfim", "crosstalk"])
    p.add_argument("n", type=int)
    p.add_argument("--target", help="QFT output bitstring (qubit 0 rightmost)")
    p.add_argument("--steps", type=int, default=1)
    p.add_argument("--theta-zz", type=float, default=0.4)
    p.add_argument("--theta-x", type=float, default=0.3)
    p.add_argument("--rounds", type=int, default=2)
    p.add_argument("--extended-gates", action="store_true")
    p.add_argument("--out", help="output .qasm path (default: stdout)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("simulate", help="print a circuit's output distribution as CSV")
    p.add_argument("input")
    p.add_argument("--extended-gates", action="store_true")
    p.add_argument("--shots", type=int, default=DEFAULT_SHOTS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", default="default")
    p.add_argument("--exact", action="store_true", help="exact noiseless probabilities")
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except QasmError as exc:
        for d in exc.diagnostics:
            print(f"{getattr(args, 'input', '')}:{d}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, CircuitError, NoiseModelError, AnalysisError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SimulationError, MemoryError) as exc:
        print(f"execution failed: {exc}", file=sys.stderr)
        return EXIT_EXEC


if __name__ == "__main__":
    sys.exit(main())
