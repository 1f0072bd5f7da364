"""OpenQASM 2.0 subset reader/writer.

Accepted statements: the header, `include "qelib1.inc";`, one qreg, at most
one creg, `rz(expr)`, `sx`, `x`, `cx`, `barrier`, `measure q[i] -> c[j]`.
`sxdg` is accepted only with ``extended=True``. Anything else is reported as
a positioned diagnostic.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .circuit import Circuit, GateKind, GateOp, barrier, cx, measure, rz, sx, validate, x

SXDG_MARKER = "sxdg"
MAX_EXPR_DEPTH = 100


@dataclass(frozen=True)
class ParseDiagnostic:
    line: int
    column: int
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.message}"


class QasmError(ValueError):
    def __init__(self, diagnostics: list[ParseDiagnostic]):
        self.diagnostics = diagnostics
        super().__init__("\n".join(str(d) for d in diagnostics))


_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<comment>//[^\n]*)
  | (?P<nl>\n)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<str>"[^"\n]*")
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<arrow>->)
  | (?P<sym>[;,()\[\]+\-*/])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


class _Stop(Exception):
    """Abort the current statement; the diagnostic is already recorded."""


def _tokenize(text: str, diags: list[ParseDiagnostic]):
    toks: list[_Tok] = []
    comments: dict[int, str] = {}
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            diags.append(ParseDiagnostic(line, col, f"unexpected character {text[pos]!r}"))
            pos += 1
            continue
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "comment":
            comments[line] = m.group()[2:].strip()
        elif kind != "ws":
            toks.append(_Tok(kind, m.group(), line, col))
        pos = m.end()
    return toks, comments, line, pos - line_start + 1


class _Parser:
    def __init__(self, text: str, extended: bool):
        self.diags: list[ParseDiagnostic] = []
        self.toks, self.comments, self.end_line, self.end_col = _tokenize(text, self.diags)
        self.i = 0
        self.extended = extended
        self.qreg: tuple[str, int] | None = None
        self.creg: tuple[str, int] | None = None
        self.ops: list[GateOp] = []
        self.op_lines: list[int] = []
        self.op_cols: list[int] = []
        self.depth = 0

    # -- token helpers
    def peek(self) -> _Tok | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def error(self, message: str, tok: _Tok | None = None):
        tok = tok or self.peek()
        if tok is None:
            self.diags.append(ParseDiagnostic(self.end_line, self.end_col, message))
        else:
            self.diags.append(ParseDiagnostic(tok.line, tok.col, message))
        raise _Stop

    def next(self, what: str = "token") -> _Tok:
        tok = self.peek()
        if tok is None:
            self.error(f"unexpected end of input, expected {what}")
        self.i += 1
        return tok

    def expect(self, text: str) -> _Tok:
        tok = self.peek()
        if tok is None or tok.text != text:
            found = "end of input" if tok is None else repr(tok.text)
            self.error(f"expected {text!r}, found {found}")
        self.i += 1
        return tok

    def accept(self, text: str) -> bool:
        tok = self.peek()
        if tok is not None and tok.text == text:
            self.i += 1
            return True
        return False

    def recover(self):
        # skip past the next ';'
        while self.i < len(self.toks):
            self.i += 1
            if self.toks[self.i - 1].text == ";":
                return

    # -- grammar
    def parse(self) -> Circuit | None:
        try:
            self.header()
        except _Stop:
            return None
        while self.peek() is not None:
            start = self.i
            try:
                self.statement()
            except _Stop:
                self.i = start
                self.recover()
        if self.qreg is None and not self.diags:
            self.diags.append(ParseDiagnostic(self.end_line, self.end_col, "missing qreg declaration"))
        if self.diags:
            return None
        n_clbits = self.creg[1] if self.creg else self.qreg[1]
        raw = Circuit(self.qreg[1], tuple(self.ops), n_clbits)
        for problem in validate(raw):
            m = re.search(r"at op (\d+)", problem)
            k = int(m.group(1)) if m else 0
            line, col = (self.op_lines[k], self.op_cols[k]) if self.ops else (1, 1)
            self.diags.append(ParseDiagnostic(line, col, problem))
        if self.diags:
            return None
        return Circuit(self.qreg[1], tuple(self._fuse_sxdg()), n_clbits)

    def header(self):
        tok = self.peek()
        if tok is None or tok.text != "OPENQASM":
            self.error("program must start with 'OPENQASM 2.0;'")
        self.i += 1
        ver = self.next("version")
        if ver.text not in ("2.0", "2"):
            self.error(f"unsupported OpenQASM version {ver.text!r}", ver)
        self.expect(";")

    def statement(self):
        tok = self.next()
        name = tok.text
        if name == "include":
            path = self.next("file name")
            if path.text != '"qelib1.inc"':
                self.error(f"unsupported include {path.text}", path)
            self.expect(";")
        elif name in ("qreg", "creg"):
            self.register(tok)
        elif tok.kind != "id":
            self.error(f"unexpected {name!r}", tok)
        elif self.qreg is None:
            self.error("statement before qreg declaration", tok)
        elif name == "rz":
            self.expect("(")
            theta = self.expr()
            self.expect(")")
            self.emit(rz(theta, self.qubit()), tok)
            self.expect(";")
        elif name in ("sx", "x") or (name == "sxdg" and self.extended):
            q = self.qubit()
            op = x(q) if name == "x" else sx(q, adjoint=(name == "sxdg"))
            self.emit(op, tok)
            self.expect(";")
        elif name == "cx":
            c = self.qubit()
            self.expect(",")
            t = self.qubit()
            if c == t:
                self.error(f"cx uses qubit {c} twice", tok)
            self.emit(cx(c, t), tok)
            self.expect(";")
        elif name == "barrier":
            qs = self.qubit_list()
            if len(set(qs)) != len(qs):
                self.error("barrier repeats a qubit", tok)
            self.emit(barrier(*qs), tok)
            self.expect(";")
        elif name == "measure":
            self.measurement(tok)
        else:
            self.error(f"unsupported gate {name!r}", tok)

    def register(self, tok: _Tok):
        name = self.next("register name")
        if name.kind != "id":
            self.error("expected register name", name)
        self.expect("[")
        size = self.next("register size")
        if size.kind != "num" or not size.text.isdigit() or int(size.text) < 1:
            self.error("register size must be a positive integer", size)
        self.expect("]")
        self.expect(";")
        entry = (name.text, int(size.text))
        if tok.text == "qreg":
            if self.qreg is not None:
                self.error("only one qreg is supported", tok)
            self.qreg = entry
        else:
            if self.creg is not None:
                self.error("only one creg is supported", tok)
            if self.qreg is not None and entry[0] == self.qreg[0]:
                self.error("creg name clashes with qreg", name)
            self.creg = entry

    def index(self, reg: tuple[str, int] | None, what: str) -> int | None:
        name = self.next(what)
        if reg is None or name.text != reg[0]:
            self.error(f"unknown {what} {name.text!r}", name)
        if not self.accept("["):
            return None
        idx = self.next("index")
        if idx.kind != "num" or not idx.text.isdigit():
            self.error("index must be a non-negative integer", idx)
        self.expect("]")
        value = int(idx.text)
        if value >= reg[1]:
            self.error(f"index {value} out of range for {reg[0]}[{reg[1]}]", idx)
        return value

    def qubit(self) -> int:
        tok = self.peek()
        q = self.index(self.qreg, "quantum register")
        if q is None:
            self.error("expected an indexed qubit", tok)
        return q

    def qubit_list(self) -> list[int]:
        qs = []
        while True:
            q = self.index(self.qreg, "quantum register")
            qs.extend(range(self.qreg[1]) if q is None else [q])
            if not self.accept(","):
                return qs

    def measurement(self, tok: _Tok):
        q = self.index(self.qreg, "quantum register")
        self.expect("->")
        if self.creg is None:
            self.error("measure requires a creg declaration", tok)
        c = self.index(self.creg, "classical register")
        self.expect(";")
        if (q is None) != (c is None):
            self.error("measure must map a bit to a bit or a register to a register", tok)
        if q is None:
            if self.qreg[1] != self.creg[1]:
                self.error("register sizes differ in whole-register measure", tok)
            for k in range(self.qreg[1]):
                self.emit(measure(k, k), tok)
        else:
            self.emit(measure(q, c), tok)

    def emit(self, op: GateOp, tok: _Tok):
        self.ops.append(op)
        self.op_lines.append(tok.line)
        self.op_cols.append(tok.col)

    # angle expressions: sum := term (('+'|'-') term)*, term := unary (('*'|'/') unary)*
    def expr(self) -> float:
        value = self.term()
        while self.peek() is not None and self.peek().text in "+-":
            if self.next().text == "+":
                value += self.term()
            else:
                value -= self.term()
        return value

    def term(self) -> float:
        value = self.unary()
        while self.peek() is not None and self.peek().text in ("*", "/"):
            op = self.next()
            rhs = self.unary()
            if op.text == "*":
                value *= rhs
            elif rhs == 0:
                self.error("division by zero", op)
            else:
                value /= rhs
        return value

    def unary(self) -> float:
        self.depth += 1
        if self.depth > MAX_EXPR_DEPTH:
            self.error("expression nested too deeply")
        try:
            if self.accept("-"):
                return -self.unary()
            if self.accept("+"):
                return self.unary()
            return self.atom()
        finally:
            self.depth -= 1

    def atom(self) -> float:
        tok = self.next("expression")
        if tok.text == "(":
            value = self.expr()
            self.expect(")")
            return value
        if tok.kind == "num":
            return float(tok.text)
        if tok.text == "pi":
            return math.pi
        self.error(f"unexpected {tok.text!r} in expression", tok)

    def _fuse_sxdg(self):
        """Collapse marked `rz(pi); sx; rz(pi)` lines back into one SX-adjoint."""
        ops, lines, out, k = self.ops, self.op_lines, [], 0
        while k < len(ops):
            window = ops[k:k + 3]
            if (
                len(window) == 3
                and self.comments.get(lines[k]) == SXDG_MARKER
                and lines[k] == lines[k + 1] == lines[k + 2]
                and _is_sxdg_expansion(window)
            ):
                out.append(sx(window[0].qubits[0], adjoint=True))
                k += 3
            else:
                out.append(ops[k])
                k += 1
        return out


def _is_sxdg_expansion(window: list[GateOp]) -> bool:
    a, b, c = window
    return (
        a.kind is GateKind.RZ and c.kind is GateKind.RZ and a.theta == math.pi == c.theta
        and b.kind is GateKind.SX and not b.adjoint
        and a.qubits == b.qubits == c.qubits
    )


def parse_qasm(text: str | bytes, extended: bool = False) -> Circuit:
    """Parse the supported subset; raise QasmError listing every diagnostic."""
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            line = bytes(text[: exc.start]).count(b"\n") + 1
            raise QasmError([ParseDiagnostic(line, 1, "input is not valid UTF-8")]) from None
    parser = _Parser(text, extended)
    circuit = parser.parse()
    if circuit is None:
        raise QasmError(parser.diags)
    return circuit


def _angle(theta: float) -> str:
    return format(theta, ".17g")


def emit_qasm(circuit: Circuit, extended: bool = False) -> str:
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{circuit.num_qubits}];"]
    has_measure = any(op.kind is GateKind.MEASURE for op in circuit.ops)
    if has_measure or circuit.num_clbits != circuit.num_qubits:
        lines.append(f"creg c[{circuit.num_clbits}];")
    for op in circuit.ops:
        qs = ",".join(f"q[{q}]" for q in op.qubits)
        if op.kind is GateKind.RZ:
            lines.append(f"rz({_angle(op.theta)}) {qs};")
        elif op.kind is GateKind.SX and op.adjoint:
            if extended:
                lines.append(f"sxdg {qs};")
            else:
                lines.append(f"rz(pi) {qs}; sx {qs}; rz(pi) {qs}; // {SXDG_MARKER}")
        elif op.kind is GateKind.MEASURE:
            lines.append(f"measure {qs} -> c[{op.clbit}];")
        else:
            lines.append(f"{op.kind.value} {qs};")
    return "\n".join(lines) + "\n"


def read_qasm(path, extended: bool = False) -> Circuit:
    with open(path, "rb") as fh:
        return parse_qasm(fh.read(), extended=extended)
