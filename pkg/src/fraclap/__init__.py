"""Fractional Laplacians on connected finite weighted graphs, with solvers
for the fractional Kazdan-Warner equation in every sign regime of c."""

from .checks import CheckReport, poincare_constant, run_suite, trudinger_moser_bound
from .errors import (
    CertificateUnsolvable,
    DimensionMismatch,
    DisconnectedError,
    FraclapError,
    InfeasibleStart,
    InvalidExponent,
    MonotonicityViolation,
    MultiplierSignError,
    NotAnUpperSolution,
    NotSolved,
    NumericalError,
    ParseError,
    QuadratureError,
    SingularSystem,
    ThresholdIsMinusInfinity,
    ValidationError,
)
from .fractional import (
    FractionalOperator,
    build_operator,
    dirichlet_energy,
    frac_apply,
    frac_gradient,
    frac_inner,
    kernel_w_quadrature,
    limit_residuals,
)
from .graph import (
    Graph,
    PairwiseField,
    build_graph,
    divergence,
    function_document,
    gradient_field,
    integral,
    iterated_laplacian,
    laplacian_apply,
    load_function,
    load_graph,
    pointwise_inner,
)
from .kazdan_warner import (
    FeasibilityVerdict,
    KWProblem,
    SolveOptions,
    SolveReport,
    ThresholdEstimate,
    auxiliary_phi0,
    check_solution,
    construct_upper_solution,
    estimate_threshold,
    poisson_meanzero_solve,
    resolvent_solve,
    screen,
    solve,
    solve_negative_c_monotone,
    solve_positive_c,
    solve_zero_c,
)
from .spectral import SpectralDecomposition, decompose, heat_apply, heat_kernel

__version__ = "0.1.0"

__all__ = [
    "CertificateUnsolvable",
    "CheckReport",
    "DimensionMismatch",
    "DisconnectedError",
    "FeasibilityVerdict",
    "FraclapError",
    "FractionalOperator",
    "Graph",
    "InfeasibleStart",
    "InvalidExponent",
    "KWProblem",
    "MonotonicityViolation",
    "MultiplierSignError",
    "NotAnUpperSolution",
    "NotSolved",
    "NumericalError",
    "PairwiseField",
    "ParseError",
    "QuadratureError",
    "SingularSystem",
    "SolveOptions",
    "SolveReport",
    "SpectralDecomposition",
    "ThresholdEstimate",
    "ThresholdIsMinusInfinity",
    "ValidationError",
    "auxiliary_phi0",
    "build_graph",
    "build_operator",
    "check_solution",
    "construct_upper_solution",
    "decompose",
    "dirichlet_energy",
    "divergence",
    "estimate_threshold",
    "frac_apply",
    "frac_gradient",
    "frac_inner",
    "function_document",
    "gradient_field",
    "heat_apply",
    "heat_kernel",
    "integral",
    "iterated_laplacian",
    "kernel_w_quadrature",
    "laplacian_apply",
    "limit_residuals",
    "load_function",
    "load_graph",
    "pointwise_inner",
    "poincare_constant",
    "poisson_meanzero_solve",
    "resolvent_solve",
    "run_suite",
    "screen",
    "solve",
    "solve_negative_c_monotone",
    "solve_positive_c",
    "solve_zero_c",
    "trudinger_moser_bound",
]
