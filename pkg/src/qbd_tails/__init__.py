"""Tail asymptotics of two-dimensional skip-free reflecting random walks.

Library layout:

- model: kernels per face, validation, drifts, stability, parity structure
- kernel: generating functions, section quadratics, branch functions/points
- geometry: extreme points, category, decay vector, convergence domain
- asymptotics: exact tail classes for boundary, marginal, diagonal directions
- oracle: censored-chain solver, tail fits, analytic-vs-empirical checks
- netgen: example model generators
- cli: the qbd-tails command
"""

from .model import (
    FACES,
    ArithmeticProfile,
    DriftSet,
    ModelFileError,
    StabilityVerdict,
    TransitionKernel,
    UnstableModelError,
    ValidatedModel,
    ValidationError,
    arithmetic_profile,
    check_stability,
    drifts,
    load_model,
    parse_model,
    swap_coordinates,
    validate,
)
from .kernel import (
    BranchPoints,
    KernelError,
    SectionCoefficients,
    branch_points,
    discriminant,
    gamma,
    is_even_discriminant,
    section_coefficients,
    zeta_lower,
    zeta_upper,
)
from .geometry import (
    DomainSample,
    Geometry,
    GeometryError,
    classify,
    compute_geometry,
    directional_decay,
    domain_contains,
    extreme_max,
    extreme_r,
    gamma_point,
    sample_boundary,
)
from .asymptotics import (
    AnalysisReport,
    AsymptoticClass,
    SigmaPoints,
    boundary_class,
    classes,
    diagonal_class,
    full_report,
    marginal_class,
    sigma_diag,
    sigma_plus,
    sigma_points,
)
from .oracle import (
    EmpiricalStationaryDistribution,
    FittedAsymptotic,
    TailSequence,
    VerificationReport,
    extract,
    fit_tail,
    solve_truncated,
    verify,
    verify_model,
)
from .netgen import (
    JacksonSimParams,
    independent_mm1,
    jackson_boundary_condition,
    jackson_model,
    jackson_u1r_closed_form,
)

__version__ = "0.1.0"
