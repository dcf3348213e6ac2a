"""Quasi-lumpability analysis and convergence bounds for finite Markov chains."""
from .bounds import (
    BoundCurve,
    BoundParams,
    BoundValidityError,
    DomainError,
    PreconditionError,
    asymptotic_bound,
    lumped_bound,
    lumped_curve,
    perturbed_product_check,
    quasi_lumpable_bound,
    quasi_lumpable_curve,
    two_block_bound,
    two_block_curve,
)
from .chain_gen import (
    TwoBlockSpec,
    generate_exactly_lumpable,
    generate_two_block_chain,
    perturb_lumpable,
)
from .kernels import BACKEND
from .lumpability import (
    AggregatedMatrix,
    ConditioningError,
    LumpabilityError,
    PartitionError,
    StatePartition,
    aggregate_distribution,
    aggregated_transition_matrix,
    analyze,
    block_transition_range,
    is_exactly_lumpable,
    lower_upper_matrices,
    lumped_matrix,
    tight_epsilon,
)
from .markov_core import (
    ConvergenceError,
    DegeneracyError,
    ShapeError,
    ergodic_coefficient,
    induced_row_norm,
    k_step_matrix,
    set_transition_mass,
    slem_estimate,
    stationary_distribution,
    step_distribution,
    total_variation,
    validate_stochastic,
)
from .simulator import (
    SimulationConfig,
    aggregated_matrix_trace,
    exact_trace,
    mc_trace,
    time_to_bound,
)

__version__ = "0.1.0"
