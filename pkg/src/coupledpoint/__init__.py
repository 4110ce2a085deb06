"""Coupled coincidence points of mixed-monotone maps on ordered metric
spaces, with a periodic boundary value problem solver built on the same
iteration.

The abstract layer (order_metric, coupled_core, iteration) works on any
space given as plain callables: a metric, a partial order that may decline
to compare, a sampler, two tracking maps, and a two-argument operator that
is isotone against the first tracking image and antitone against the
second.  The concrete layer (bvp) instantiates it for first-order periodic
problems on a uniform grid through a pair of positive combination kernels.
The oracle module holds independent reference machinery (tabulated finite
problems, a shooting integrator) used by the tests and the cross-check
command; it shares no numerics with the solver.
"""

from .coupled_core import (
    ContractionReport,
    ContractionWitness,
    CoupledProblem,
    PreimageError,
    check_commutation,
    check_contraction,
    check_mixed_GS_monotone,
    identity_preimage,
    tabulated_preimage,
)
from .bvp import (
    BvpSolution,
    BvpSpec,
    GridFunction,
    KernelPair,
    NonCollapseError,
    affine_rhs,
    apply_F,
    check_growth_conditions,
    coupled_problem_from_spec,
    greens_weights,
    grid_function_space,
    iteration_start,
    kernel_quadrature_masses,
    make_kernels,
    make_rhs,
    ode_residual,
    pointwise_leq,
    sin_forced_rhs,
    solve_bvp,
    sup_distance,
    verify_lower_upper,
)
from .iteration import (
    CoincidenceResult,
    InitOrderError,
    IterationState,
    UniquenessReport,
    init_iteration,
    run as run_iteration,
    step,
    trace_csv_text,
    uniqueness_probe,
    write_trace_csv,
)
from .oracle import (
    CoincidenceSets,
    FiniteProblem,
    PeriodicOrbit,
    enumerate_coupled_points,
    solve_periodic_ode,
)
from .order_metric import (
    AXIOM_TOL,
    AlteringDistance,
    BUILTIN_ALTERING,
    IDENTITY,
    OrderedMetricSpace,
    SQUARE,
    SQUARE_MINUS_LOG,
    SamplerError,
    ValidationReport,
    Violation,
    ZERO,
    check_metric_order_axioms,
    oscillation_defect,
    real_line_space,
    scaled,
    validate_altering_distance,
)

__version__ = "0.1.0"

__all__ = [
    "AXIOM_TOL",
    "AlteringDistance",
    "BUILTIN_ALTERING",
    "BvpSolution",
    "BvpSpec",
    "CoincidenceResult",
    "CoincidenceSets",
    "ContractionReport",
    "ContractionWitness",
    "CoupledProblem",
    "FiniteProblem",
    "GridFunction",
    "IDENTITY",
    "InitOrderError",
    "IterationState",
    "KernelPair",
    "NonCollapseError",
    "OrderedMetricSpace",
    "PeriodicOrbit",
    "PreimageError",
    "SQUARE",
    "SQUARE_MINUS_LOG",
    "SamplerError",
    "UniquenessReport",
    "ValidationReport",
    "Violation",
    "ZERO",
    "affine_rhs",
    "apply_F",
    "check_commutation",
    "check_contraction",
    "check_growth_conditions",
    "check_metric_order_axioms",
    "check_mixed_GS_monotone",
    "coupled_problem_from_spec",
    "enumerate_coupled_points",
    "greens_weights",
    "grid_function_space",
    "identity_preimage",
    "init_iteration",
    "iteration_start",
    "kernel_quadrature_masses",
    "make_kernels",
    "make_rhs",
    "ode_residual",
    "oscillation_defect",
    "pointwise_leq",
    "real_line_space",
    "run_iteration",
    "scaled",
    "sin_forced_rhs",
    "solve_bvp",
    "solve_periodic_ode",
    "step",
    "sup_distance",
    "tabulated_preimage",
    "trace_csv_text",
    "uniqueness_probe",
    "validate_altering_distance",
    "verify_lower_upper",
    "write_trace_csv",
]
