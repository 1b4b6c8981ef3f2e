"""Energy-based sparse multi-head attention via binary optimization.

The pipeline: attention tensors become per-head couplings and per-token
fields, those assemble into a QUBO (equivalently a spin problem), an
annealing backend finds a low-energy selection mask, and the resulting
ground-state energy is decomposed per token and mapped back to feature
space.  A custom backward rule differentiates everything except the
discrete solve, which is treated as a constant.
"""

from .hamiltonian import (
    CouplingTensor,
    DynamicCoefficients,
    EnergyBreakdown,
    FieldVector,
    assemble_qubo,
    compute_coupling,
    compute_field,
    dynamic_coefficients,
    energy_breakdown,
    expected_max_subterms,
    subterm_ratios,
)
from .operator import (
    EnergyOutput,
    ForwardCache,
    GradientBundle,
    backward,
    extract_head_masks,
    forward,
    forward_given_masks,
)
from .problems import (
    FlipDelta,
    IsingProblem,
    QuboProblem,
    energy,
    flip_delta,
    to_ising,
)
from .solvers import (
    BACKENDS,
    AnnealSchedule,
    BarrierReport,
    BarrierUnreachableError,
    CapacityError,
    SolveResult,
    TtsReport,
    acceptance_probability,
    brute_force,
    estimate_success_probability,
    min_barrier,
    register_backend,
    simulated_anneal,
    soft_spin_anneal,
    solve,
    success_tolerance,
    time_to_solution,
)
from .types import (
    AttentionInput,
    CoefficientConfig,
    SelectionMask,
    Shape,
    ShapeError,
    SpinState,
    ValidationError,
    flat_index,
    mask_to_spins,
    spins_to_mask,
    unflatten_index,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "AnnealSchedule",
    "AttentionInput",
    "BACKENDS",
    "BarrierReport",
    "BarrierUnreachableError",
    "CapacityError",
    "CoefficientConfig",
    "CouplingTensor",
    "DynamicCoefficients",
    "EnergyBreakdown",
    "EnergyOutput",
    "FieldVector",
    "FlipDelta",
    "ForwardCache",
    "GradientBundle",
    "IsingProblem",
    "QuboProblem",
    "SelectionMask",
    "Shape",
    "ShapeError",
    "SolveResult",
    "SpinState",
    "TtsReport",
    "ValidationError",
    "acceptance_probability",
    "assemble_qubo",
    "backward",
    "brute_force",
    "compute_coupling",
    "compute_field",
    "dynamic_coefficients",
    "energy",
    "energy_breakdown",
    "estimate_success_probability",
    "expected_max_subterms",
    "extract_head_masks",
    "flat_index",
    "flip_delta",
    "forward",
    "forward_given_masks",
    "mask_to_spins",
    "min_barrier",
    "register_backend",
    "simulated_anneal",
    "soft_spin_anneal",
    "solve",
    "spins_to_mask",
    "subterm_ratios",
    "success_tolerance",
    "time_to_solution",
    "to_ising",
    "unflatten_index",
]
