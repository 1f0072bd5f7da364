import csv
import hashlib
import json

import pytest

from revimpact.bench import ghz_circuit, qft_circuit
from revimpact.circuit import Circuit, GateKind, cx, sx, x
from revimpact.cli import main
from revimpact.qasm import emit_qasm, parse_qasm, read_qasm
from revimpact.sim import shot_noise_bound


@pytest.fixture
def qasm_file(tmp_path):
    def write(circuit, name="in.qasm"):
        path = tmp_path / name
        path.write_text(emit_qasm(circuit))
        return path
    return write


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def strip_timestamp(path):
    body = json.loads(path.read_text())
    body.pop("created")
    return body


def test_bench_qft_round_trips(tmp_path):
    out = tmp_path / "qft.qasm"
    assert main(["bench", "qft", "3", "--target", "000", "--out", str(out)]) == 0
    assert read_qasm(out) == qft_circuit(3, "000")


def test_bench_ghz_to_stdout(capsys):
    assert main(["bench", "ghz", "4"]) == 0
    c = parse_qasm(capsys.readouterr().out)
    assert c.count_ops()["CX"] == 3


@pytest.mark.parametrize("argv", [
    ["bench", "qft", "3", "--target", "00"],
    ["bench", "ghz", "1"],
    ["bench", "tfim", "3", "--steps", "0"],
])
def test_bench_invalid_spec(argv):
    assert main(argv) == 2


def test_analyze_ghz_zero_noise(qasm_file, tmp_path):
    src = qasm_file(ghz_circuit(2))
    before = digest(src)
    out = tmp_path / "out"
    assert main(["analyze", str(src), "--noise", "ideal", "--shots", "8000", "--out", str(out)]) == 0
    body = json.loads((out / "report.json").read_text())
    assert body["config"]["shots"] == 8000 and body["config"]["reversals"] == 5
    assert body["config"]["noise"] == "ideal"
    assert body["shots"] == 8000
    assert len(body["records"]) == 2
    assert all(r["tvd"] <= shot_noise_bound(8000, 2) for r in body["records"])
    rows = list(csv.DictReader((out / "report.csv").open()))
    assert [int(r["gate_index"]) for r in rows] == [r["gate_index"] for r in body["records"]]
    assert {p.name for p in (out / "tracks").iterdir()} == {"track_q0.csv", "track_q1.csv"}
    assert digest(src) == before


def test_analyze_include_rz_and_validate(qasm_file, tmp_path):
    src = qasm_file(Circuit(2, (sx(0), cx(0, 1))).measure_all())
    out = tmp_path / "out"
    assert main(["analyze", str(src), "--include-rz", "--validate", "--reversals", "2",
                 "--shots", "2000", "--seed", "3", "--out", str(out), "--formats", "json"]) == 0
    body = json.loads((out / "report.json").read_text())
    assert body["amplification"] == 2 and body["config"]["include_rz"] is True
    assert "original_vs_ideal_tvd" in body["analyses"]
    assert all(r["ideal_tvd"] is not None for r in body["records"])
    assert not (out / "report.csv").exists()


def test_analyze_is_deterministic(qasm_file, tmp_path):
    src = qasm_file(qft_circuit(3, "011"))
    out = tmp_path / "out"
    argv = ["analyze", str(src), "--shots", "2000", "--seed", "17", "--out", str(out)]
    assert main(argv) == 0
    first = strip_timestamp(out / "report.json"), (out / "report.csv").read_bytes()
    assert main(argv) == 0
    assert (strip_timestamp(out / "report.json"), (out / "report.csv").read_bytes()) == first
    # concurrent variant execution gives the same numbers
    assert main(argv + ["--workers", "3"]) == 0
    assert (out / "report.csv").read_bytes() == first[1]


def test_analyze_custom_noise_file(qasm_file, tmp_path):
    src = qasm_file(Circuit(1, (x(0),)).measure_all())
    noise = tmp_path / "noise.json"
    noise.write_text(json.dumps({"p1": 0.2, "readout_flip": 0.0}))
    out = tmp_path / "out"
    assert main(["analyze", str(src), "--noise", str(noise), "--shots", "4000", "--out", str(out)]) == 0
    body = json.loads((out / "report.json").read_text())
    assert body["noise_model"]["p1"] == 0.2
    assert body["records"][0]["tvd"] > 0.1


@pytest.mark.parametrize("noise", ['{"p1": 3}', '{"bogus": 1}', "not json"])
def test_analyze_bad_noise_file(qasm_file, tmp_path, noise):
    src = qasm_file(Circuit(1, (x(0),)))
    path = tmp_path / "noise.json"
    path.write_text(noise)
    assert main(["analyze", str(src), "--noise", str(path), "--out", str(tmp_path)]) == 2


def test_parse_error_goes_to_stderr(tmp_path, capsys):
    src = tmp_path / "bad.qasm"
    src.write_text("OPENQASM 2.0;\nqreg q[1];\nh q[0];\n")
    assert main(["analyze", str(src), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "3:1" in err and "unsupported gate 'h'" in err
    assert not (tmp_path / "o").exists()


def test_missing_input_and_bad_flags(tmp_path):
    assert main(["analyze", str(tmp_path / "missing.qasm")]) == 2
    src = tmp_path / "a.qasm"
    src.write_text(emit_qasm(Circuit(1, (x(0),))))
    assert main(["analyze", str(src), "--reversals", "0"]) == 2
    assert main(["analyze", str(src), "--shots", "0"]) == 2
    with pytest.raises(SystemExit) as info:
        main(["analyze"])
    assert info.value.code == 2


def test_execution_failure_exit_3(tmp_path):
    src = tmp_path / "big.qasm"
    src.write_text(emit_qasm(Circuit(21, (x(0),))))
    assert main(["simulate", str(src), "--shots", "10"]) == 3


def test_transform_every_gate(qasm_file, tmp_path):
    c = Circuit(3, (x(0), sx(1), cx(0, 1), x(2), cx(1, 2), sx(0), x(1), cx(2, 0), sx(2)))
    src = qasm_file(c)
    out = tmp_path / "variants"
    assert main(["transform", str(src), "--out", str(out), "--reversals", "2"]) == 0
    files = sorted(out.iterdir())
    assert len(files) == 9
    v = read_qasm(out / "variant_g7.qasm")
    assert len(v.ops) == len(c.ops) + 2 * 2 + 2


def test_transform_single_and_group(qasm_file, tmp_path):
    c = Circuit(2, (x(0), sx(1, adjoint=True), x(0)))
    src = qasm_file(c)
    out = tmp_path / "v"
    assert main(["transform", str(src), "--gate-index", "1", "--out", str(out)]) == 0
    assert [p.name for p in out.iterdir()] == ["variant_g1.qasm"]
    assert sum(op.kind is GateKind.SX for op in read_qasm(out / "variant_g1.qasm").ops) == 11
    assert main(["transform", str(src), "--group", "0,1", "--out", str(out)]) == 0
    assert (out / "group_0-1.qasm").exists()
    assert main(["transform", str(src), "--group", "0,2", "--out", str(out), "--extended-gates"]) == 0
    interleaved = Circuit(1, (x(0), sx(0), x(0)))
    bad = qasm_file(interleaved, "interleaved.qasm")
    assert main(["transform", str(bad), "--group", "0,2", "--out", str(out)]) == 2
    assert main(["transform", str(src), "--gate-index", "7", "--out", str(out)]) == 2
    assert main(["transform", str(src), "--group", "a,b", "--out", str(out)]) == 2


def test_mitigate_pipeline(tmp_path):
    bench = tmp_path / "xt.qasm"
    assert main(["bench", "crosstalk", "3", "--rounds", "1", "--out", str(bench)]) == 0
    noise = tmp_path / "noise.json"
    noise.write_text(json.dumps({"crosstalk_factor": 3.0, "p1": 0.01}))
    out = tmp_path / "m"
    assert main(["mitigate", str(bench), "--noise", str(noise), "--shots", "4000",
                 "--top-k", "1", "--seed-batch", "4", "--out", str(out)]) == 0
    summary = json.loads((out / "mitigation.json").read_text())
    assert summary["plan"]["inserted_barriers"] >= 2
    assert len(summary["runs"]) == 4
    assert summary["tvd_after"] < summary["tvd_before"]
    mitigated = read_qasm(out / "mitigated.qasm")
    assert sum(op.kind is GateKind.BARRIER for op in mitigated.ops) == summary["plan"]["inserted_barriers"]


def test_mitigate_from_report_and_noop(qasm_file, tmp_path):
    src = qasm_file(Circuit(1, (x(0), sx(0))).measure_all())
    out = tmp_path / "r"
    assert main(["analyze", str(src), "--shots", "1000", "--out", str(out)]) == 0
    assert main(["mitigate", str(src), "--report", str(out / "report.json"), "--shots", "1000",
                 "--out", str(out)]) == 0
    summary = json.loads((out / "mitigation.json").read_text())
    assert summary["plan"]["inserted_barriers"] == 0
    assert summary["tvd_before"] == summary["tvd_after"]
    assert read_qasm(out / "mitigated.qasm") == read_qasm(src)


def test_mitigate_k_zero(qasm_file):
    src = qasm_file(Circuit(1, (x(0),)))
    assert main(["mitigate", str(src), "--top-k", "0"]) == 2


def test_simulate_outputs(qasm_file, capsys):
    src = qasm_file(ghz_circuit(2))
    assert main(["simulate", str(src), "--exact"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "bitstring,probability"
    assert [l.split(",")[0] for l in lines[1:]] == ["00", "11"]
    assert main(["simulate", str(src), "--shots", "500", "--seed", "1"]) == 0
    total = sum(float(l.split(",")[1]) for l in capsys.readouterr().out.splitlines()[1:])
    assert total == pytest.approx(1.0)
