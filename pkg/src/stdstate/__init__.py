"""Standard quantum states: construction, structure recovery and variant search."""

from .classifier import (
    ClassifierConfig,
    PosteriorReport,
    classify,
    min_success_probability,
    posterior_after_failure,
    posterior_after_success,
)
from .errors import (
    DegenerateLocationError,
    DegeneratePairError,
    DegenerateTrioError,
    FileFormatError,
    NotStandardFormError,
    ScriptParseError,
    SizeError,
    StdStateError,
    ValidationError,
)
from .gates import Cnot, ControlledU, GateScript, SingleQubit, TwoLevel, dump_script, parse_script
from .locator import (
    ExactSampler,
    LocatorConfig,
    MeasurementTree,
    ShotSampler,
    VariantFinding,
    derive_variant_magnitudes,
    expected_prefix_prob,
    explore_tree,
    locate_variants,
    node_count_bound,
)
from .sequencer import (
    CoefficientOracle,
    Procedure1Config,
    Procedure1Report,
    QubitOrder,
    TrioVerdict,
    extract_pairs,
    insert_qubit,
    run_procedure1,
    sequence_all,
    sequence_bound,
    trio_test,
)
from .standard import (
    LevelPair,
    StandardStateSpec,
    VariantSpec,
    build_minimal,
    build_standard,
    full_decompose,
    inject_variant,
    random_minimal_spec,
    random_pair,
    random_pattern,
    sparse_synthesize,
    theorem1_transform,
    variant_rotation,
)
from .statevector import (
    StateVector,
    apply_gate,
    equal_up_to_global_phase,
    fidelity,
    get_amplitude,
    new_zero_state,
    permute_qubits,
    prefix_probability,
    random_state,
    sample_prefix_probability,
)

__version__ = "0.1.0"
