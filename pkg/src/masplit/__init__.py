"""Least-squares splitting solver for det(I + D2u) = f on the unit torus.

The iteration alternates two projections on symmetric matrix fields: a
spectral projection onto discrete Hessians and a nodewise projection
onto the determinant constraint. This package provides those building
blocks, the fixed-point driver, a linearized contraction-rate
estimator, self-checking oracle suites, and a CLI that writes CSV/JSON
reports with matplotlib figures.
"""

from .analysis import (
    OperatorNormEstimate,
    estimate_contraction_norm,
    linearized_matrix,
    linearized_step,
    rate_bound,
)
from .detproj import (
    FieldProjection,
    HyperbolaProjection,
    TangentProjector,
    project_field,
    project_field_info,
    project_pair,
    project_point,
    projection_derivative,
    projection_derivative_field,
    tangent_projector,
    target_sensitivity_fd,
)
from .errors import (
    AmbiguousProjection,
    ContractivityViolated,
    InsufficientData,
    MasplitError,
    NonConvergence,
)
from .fieldio import read_field, write_field, write_problem_bundle
from .fields import (
    ScalarField,
    SpectrumField,
    SymMatrixField,
    node_coordinates,
    random_matrix_field,
    random_scalar_field,
)
from .matfield import (
    EigenPair,
    EllipticityReport,
    cof,
    cof_field,
    det_field,
    eigen,
    eigen_grid,
    ellipticity_report,
    plus_identity,
)
from .problems import (
    ELLIPTIC_EPS_LIMIT,
    ExternalProblem,
    ManufacturedProblem,
    error_vs_exact,
    make_manufactured,
)
from .solver import (
    ConvergenceTrace,
    RateFit,
    SolverConfig,
    TraceRow,
    apply_step,
    fit_rate,
    solve,
)
from .torus import (
    dealias,
    dealias_mask,
    dft,
    hessian_of,
    idft,
    inner_product,
    project_onto_hessians,
    sobolev_norm,
)
from .validation import (
    CheckResult,
    SUITES,
    hyperbola_distance_oracle,
    run_suite,
    run_suites,
)

__version__ = "0.1.0"

__all__ = [
    "AmbiguousProjection",
    "CheckResult",
    "ContractivityViolated",
    "ConvergenceTrace",
    "ELLIPTIC_EPS_LIMIT",
    "EigenPair",
    "EllipticityReport",
    "ExternalProblem",
    "FieldProjection",
    "HyperbolaProjection",
    "InsufficientData",
    "ManufacturedProblem",
    "MasplitError",
    "NonConvergence",
    "OperatorNormEstimate",
    "RateFit",
    "ScalarField",
    "SolverConfig",
    "SpectrumField",
    "SUITES",
    "SymMatrixField",
    "TangentProjector",
    "TraceRow",
    "apply_step",
    "cof",
    "cof_field",
    "dealias",
    "dealias_mask",
    "det_field",
    "dft",
    "eigen",
    "eigen_grid",
    "ellipticity_report",
    "error_vs_exact",
    "estimate_contraction_norm",
    "fit_rate",
    "hessian_of",
    "hyperbola_distance_oracle",
    "idft",
    "inner_product",
    "linearized_matrix",
    "linearized_step",
    "make_manufactured",
    "node_coordinates",
    "plus_identity",
    "project_field",
    "project_field_info",
    "project_onto_hessians",
    "project_pair",
    "project_point",
    "projection_derivative",
    "projection_derivative_field",
    "random_matrix_field",
    "random_scalar_field",
    "rate_bound",
    "read_field",
    "run_suite",
    "run_suites",
    "sobolev_norm",
    "solve",
    "tangent_projector",
    "target_sensitivity_fd",
    "write_field",
    "write_problem_bundle",
    "__version__",
]
