import math

from hypothesis import strategies as st

from revimpact.circuit import Circuit, GateOp, cx, rz, sx, x

angles = st.one_of(
    st.floats(-4 * math.pi, 4 * math.pi, allow_nan=False, allow_infinity=False),
    st.sampled_from([0.0, math.pi, -math.pi / 2, 1e-300, 5e-324]),
)


@st.composite
def unitary_ops(draw, n: int) -> GateOp:
    kind = draw(st.sampled_from(["rz", "sx", "sxdg", "x", "cx"] if n > 1 else ["rz", "sx", "sxdg", "x"]))
    q = draw(st.integers(0, n - 1))
    if kind == "rz":
        return rz(draw(angles), q)
    if kind == "sx":
        return sx(q)
    if kind == "sxdg":
        return sx(q, adjoint=True)
    if kind == "x":
        return x(q)
    t = draw(st.integers(0, n - 2))
    return cx(q, t if t < q else t + 1)


@st.composite
def circuits(draw, min_qubits=1, max_qubits=4, max_ops=20, measured=None) -> Circuit:
    n = draw(st.integers(min_qubits, max_qubits))
    ops = draw(st.lists(unitary_ops(n), max_size=max_ops))
    c = Circuit(n, tuple(ops))
    if measured is None:
        measured = draw(st.booleans())
    return c.measure_all() if measured else c
