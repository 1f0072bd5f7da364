import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from revimpact.bench import ghz_circuit, qft_circuit, tfim_circuit
from revimpact.circuit import Circuit, GateKind, barrier, measure, sx, x
from revimpact.qasm import QasmError, emit_qasm, parse_qasm

from _strategies import circuits

HEAD = "OPENQASM 2.0;\nqreg q[2];\n"


def parse_error(text, **kw) -> list:
    with pytest.raises(QasmError) as info:
        parse_qasm(text, **kw)
    return info.value.diagnostics


def test_minimal_program():
    c = parse_qasm("OPENQASM 2.0; qreg q[1]; x q[0];")
    assert c.num_qubits == 1 and c.ops == (x(0),)


def test_angle_expressions():
    c = parse_qasm(HEAD + "rz(pi/2) q[0]; rz(-(2*pi - 1)/4 + 0.5e1) q[1]; rz(--pi) q[0];")
    assert c.ops[0].theta == math.pi / 2
    assert c.ops[1].theta == pytest.approx(-(2 * math.pi - 1) / 4 + 5)
    assert c.ops[2].theta == math.pi


def test_unsupported_gate_is_positioned():
    (d,) = parse_error("OPENQASM 2.0;\nqreg q[1];\n  h q[0];\n")
    assert (d.line, d.column) == (3, 3)
    assert d.message == "unsupported gate 'h'"


def test_every_bad_statement_is_reported():
    diags = parse_error(HEAD + "h q[0];\nx q[5];\ncx q[0] q[1];\nrz(1/0) q[0];\n")
    assert [d.line for d in diags] == [3, 4, 5, 6]
    assert "out of range" in diags[1].message
    assert "division by zero" in diags[3].message


def test_sxdg_needs_extended_flag():
    assert parse_error(HEAD + "sxdg q[0];")[0].message == "unsupported gate 'sxdg'"
    assert parse_qasm(HEAD + "sxdg q[0];", extended=True).ops == (sx(0, adjoint=True),)


def test_barrier_and_measure_forms():
    c = parse_qasm(HEAD + "creg c[2];\nbarrier q;\nbarrier q[1],q[0];\nmeasure q -> c;\n")
    assert c.ops[0] == barrier(0, 1) and c.ops[1] == barrier(1, 0)
    assert c.ops[2:] == (measure(0, 0), measure(1, 1))


def test_measure_to_other_bit():
    c = parse_qasm(HEAD + "creg c[2];\nx q[0];\nmeasure q[0] -> c[1];\n")
    assert c.ops[1] == measure(0, 1)


def test_emit_single_x():
    text = emit_qasm(Circuit(1, (x(0),)))
    assert text.count("x q[0];") == 1


def test_sxdg_emission_forms():
    c = Circuit(1, (sx(0, adjoint=True),))
    plain = emit_qasm(c)
    assert "rz(pi) q[0]; sx q[0]; rz(pi) q[0];" in plain and "sxdg" in plain
    assert parse_qasm(plain).ops == c.ops
    ext = emit_qasm(c, extended=True)
    assert "sxdg q[0];" in ext
    assert parse_qasm(ext, extended=True).ops == c.ops


def test_marker_only_fuses_exact_expansion():
    # an unmarked rz(pi) sx rz(pi) stays three ops
    c = parse_qasm(HEAD + "rz(pi) q[0]; sx q[0]; rz(pi) q[0];")
    assert [op.kind for op in c.ops] == [GateKind.RZ, GateKind.SX, GateKind.RZ]


@pytest.mark.parametrize("make", [
    lambda: qft_circuit(3, "101"), lambda: ghz_circuit(4), lambda: tfim_circuit(3, steps=2),
])
def test_benchmarks_round_trip(make):
    c = make()
    assert parse_qasm(emit_qasm(c)) == c


@settings(max_examples=100)
@given(circuits(max_qubits=5, max_ops=30), st.booleans())
def test_round_trip_fuzz(c, extended):
    back = parse_qasm(emit_qasm(c, extended=extended), extended=extended)
    assert back.num_qubits == c.num_qubits
    assert back.ops == c.ops


@pytest.mark.parametrize("text", [
    "",
    "OPENQASM 3.0; qreg q[1];",
    "OPENQASM 2.0; qreg q[0];",
    "OPENQASM 2.0; qreg q[2]; qreg r[2];",
    "OPENQASM 2.0; x q[0];",
    "OPENQASM 2.0; qreg q[1]; rz( q[0];",
    "OPENQASM 2.0; qreg q[1]; rz(pi q[0];",
    "OPENQASM 2.0; qreg q[1]; x q[0]",
    "OPENQASM 2.0; qreg q[1]; x q[0]; @",
    "OPENQASM 2.0; qreg q[1]; measure q[0] -> d[0];",
    "OPENQASM 2.0; qreg q[1]; creg c[1]; measure q[0] -> c[0]; x q[0];",
    "OPENQASM 2.0; qreg q[1]; rz(" + "(" * 5000 + "1" + ")" * 5000 + ") q[0];",
    b"OPENQASM 2.0; qreg q[1]; \xff x q[0];",
])
def test_malformed_inputs_give_positioned_diagnostics(text):
    diags = parse_error(text)
    assert diags
    src = text.decode("utf-8", "replace") if isinstance(text, bytes) else text
    n_lines = src.count("\n") + 1
    for d in diags:
        assert 1 <= d.line <= n_lines and d.column >= 1 and d.message


@settings(max_examples=200)
@given(st.text(alphabet="OPENQASM2.0;qregcxsz()[]pi/*+-0123456789 \n->,", max_size=80))
def test_arbitrary_text_never_crashes(text):
    try:
        parse_qasm("OPENQASM 2.0;\nqreg q[3];\ncreg c[3];\n" + text)
    except QasmError as exc:
        assert all(d.line >= 1 and d.column >= 1 for d in exc.diagnostics)


@settings(max_examples=100)
@given(st.binary(max_size=60))
def test_arbitrary_bytes_never_crash(data):
    try:
        parse_qasm(data)
    except QasmError:
        pass


def test_gate_after_measure_points_at_the_gate():
    (d,) = parse_error("OPENQASM 2.0;\nqreg q[1];\ncreg c[1];\nmeasure q[0] -> c[0];\nx q[0];\n")
    assert (d.line, d.column) == (5, 1) and "after measurement" in d.message


def test_repeated_qubit_is_a_diagnostic():
    (d,) = parse_error(HEAD + "cx q[1],q[1];")
    assert (d.line, d.column) == (3, 1) and "twice" in d.message
