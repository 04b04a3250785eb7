"""Exact simulation of Grover search under local unital noise with Markovian memory."""
from .analysis import (
    Dataset,
    PerformanceReport,
    RegimeMap,
    RegimePoint,
    default_t_max,
    figure_data,
    first_maximum,
    performance_gate,
    regime_scan,
)
from .core import (
    DensityMatrix,
    GroverInstance,
    Statevector,
    apply_grover,
    apply_grover_dm,
    apply_local_unitary,
    basis_state,
    fidelity_with_basis,
    overlap,
    uniform_state,
)
from .errors import (
    ConsistencyError,
    DomainError,
    GroverNoiseError,
    ShapeError,
    SiteIndexError,
    SizeError,
    UnitaryError,
    UnsupportedClassification,
)
from .memory import (
    ConditionalEnsemble,
    MarkovNoiseParams,
    conditional_probs,
    enumerate_trajectories,
    evolve_step,
    initialize_ensemble,
    perfect_memory_closed_form,
    simulate,
    simulate_memoryless,
    simulate_reduced_sigma_x,
)
from .noise import (
    Classification,
    GoodNoiseAnalysis,
    NoiseLayout,
    NoiseUnitary,
    OverlapElements,
    classify_good_noise,
    flipped_index,
    overlap_elements,
    two_step_probabilities,
)
from .trace import SimulationTrace

__version__ = "0.1.0"
