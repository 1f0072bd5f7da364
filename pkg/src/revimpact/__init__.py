"""Gate-reversal impact analysis for {RZ, SX, X, CX} quantum circuits."""

__version__ = "0.1.0"

from .analysis import (
    ImpactRecord,
    ImpactReport,
    build_report,
    input_impact,
    one_vs_two_qubit,
    pearson,
    positional_correlation,
    qubit_coverage,
    tvd,
    validation_correlation,
)
from .bench import BenchSpec, ghz_circuit, qft_circuit, tfim_circuit, crosstalk_circuit
from .circuit import (
    Circuit,
    CircuitError,
    GateKind,
    GateOp,
    Origin,
    adjoint_of,
    barrier,
    compute_layers,
    cx,
    equivalent_up_to_phase,
    measure,
    rz,
    sx,
    unitary_of,
    validate,
    x,
)
from .mitigation import evaluate_mitigation, select_target_layers, serialize_layers
from .noise import NoiseModel
from .qasm import QasmError, emit_qasm, parse_qasm
from .reversal import eligible_gate_indices, generate_suite, insert_group_reversal, insert_reversal
from .sim import (
    Distribution,
    derive_seed,
    execute_suite,
    ideal_probabilities,
    run_noisy,
    shot_noise_bound,
)
