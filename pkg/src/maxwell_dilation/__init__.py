"""Quantum-circuit simulation of lossy dispersive Maxwell systems by unitary dilation."""

from .circuit import (
    DilatedState,
    DimensionMismatch,
    MeasurementRecord,
    NonUnitaryBlock,
    ZeroProbabilityBranch,
    apply_program,
    controlled_lossless_step,
    init_dilated,
    lossless_step_operator,
    measure_ancilla,
)
from .config import ParseError, RunConfig, SchemaError, ValidationError, load_config
from .dilation_kraus import (
    KrausDilation,
    StructureViolation,
    TwoLevelRotation,
    build_udiss_kraus,
    decompose_two_level,
    kraus_gate_counts,
    synthesize_gates,
)
from .dilation_lcu import LcuCircuit, build_lcu_dilation, synthesize_diagonal
from .evolution import (
    EvolutionPlan,
    NonPositiveRate,
    ProbabilityBounds,
    SimulationReport,
    error_estimate,
    exact_propagator,
    optimal_dt,
    probability_bounds,
    trotter_run,
)
from .gates import DilationCircuit, Gate
from .kraus import DimensionTooLarge, KrausPair, NegativeTimeStep, build_kraus_pair
from .medium import (
    VACUUM,
    InvalidMedium,
    LorentzPole,
    MediumClass,
    MediumSpec,
    NegativeDamping,
    NonPositiveCoupling,
    PoleSingularity,
    response_at,
    validate_medium,
)
from .operators import (
    GeneratorPair,
    GridSpec,
    LayoutMismatch,
    StateLayout,
    StateVector,
    ZeroField,
    build_generators,
    build_layout,
    encode_initial_state,
    observables,
)
from .scenario import resource_report, run_scenario, sweep_convergence, verify_invariants

__version__ = "0.1.0"
