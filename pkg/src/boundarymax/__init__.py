"""Numerical suite for boundary-concentrated classical-flow quantum amplitudes.

Solves the vanished-quantum-force condition on curved-space convex domains,
verifies the discrete strong maximum principle, recovers the classical flow
velocity and the external force that sustains it, and demonstrates by explicit
hyperbolic evolution that no such boundary principle holds once the metric
signature is Lorentzian.
"""

from .elliptic import (
    ConvergenceReport,
    LinearSystem,
    ManufacturedProblem,
    RayReport,
    ScalarField,
    SMPReport,
    SolveReport,
    VectorField,
    assemble_classicality,
    convergence_study,
    ray_monotonicity,
    solve_dirichlet,
    verify_smp,
)
from .errors import (
    AllMasked,
    BoundaryMaxError,
    CFLViolation,
    ConfigInvalid,
    DegenerateMetric,
    DomainTooSmall,
    EmptyInterior,
    IncompatibleSource,
    MalformedCSV,
    NonConvexDomain,
    NotPositiveDefinite,
    NotRefining,
    NumericalBlowup,
    SpacingTooCoarse,
    UnsupportedMetric,
)
from .geometry import (
    ConformalMetric,
    ConvexPolygon,
    DiagonalMetric,
    Disc,
    FlatMetric,
    Grid2D,
    InverseMetricField,
    NodeClass,
    SampledMetric,
    Superellipse,
    build_grid,
    classify_nodes,
    regular_polygon,
    sample_metric,
)
from .hydro import (
    BreathingGaussian,
    DensityFamily,
    ForceReport,
    QuantumPotentialField,
    SolvedClassical,
    StaticDensity,
    TranslatingGaussian,
    continuity_residual,
    external_force,
    greens_flow_oracle,
    invert_continuity,
    quantum_force,
    quantum_potential,
    radial_flow_oracle,
    total_mass,
)
from .relativity import (
    ConformalMinkowski,
    EvolutionSeries,
    KGState,
    MinkowskiSpacetime,
    PotentialDeviationReport,
    SignatureReport,
    SpacetimeExtremumReport,
    christoffel,
    christoffel_fd,
    detect_interior_max,
    evolve_kg,
    gaussian_pulse,
    moving_pulse_state,
    quantum_potential_deviation,
    signature_check,
    superpose,
)

__version__ = "0.1.0"
