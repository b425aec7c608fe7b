"""hyperwalk: geodesic random walks on constant-curvature spaces.

Simulates zero-drift (and biased) Markov chains on the hyperboloid model of
hyperbolic space and on Euclidean space, and classifies them as recurrent or
transient from Monte Carlo or closed-form bounds on their radial increment
moments.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    ContractError,
    DimensionError,
    DomainError,
    HyperwalkError,
    InvariantViolationError,
    OverflowGuardError,
    UndefinedFrameError,
    UsageError,
)
from .geometry import (
    CurvatureModel,
    IncrementDecomposition,
    LorentzPoint,
    RadialFrame,
    TangentVector,
    decompose_increment,
    distance,
    euclidean_radial_increment,
    exp_map,
    log_map,
    minkowski_form,
    origin,
    radial_direction,
    radial_frame,
    radial_increment_exact,
)
from .increments import (
    BoxLaw,
    CustomLaw,
    EllipticLaw,
    HeavyTailLaw,
    IncrementLaw,
    InwardBiasedLaw,
    RadialProfile,
    TangentSample,
    elliptic_moments,
    heavytail_inward_offset,
    heavytail_outward_prob,
    sample_box,
    sample_elliptic,
    sample_heavytail,
    sample_inward_biased,
    step_length_bound,
    zero_drift_check,
)
from .lamperti import (
    ClassificationReport,
    Estimate,
    MomentFunctions,
    Verdict,
    asymptotic_increment,
    classify_constant_curvature,
    classify_elliptic_chain,
    classify_euclidean,
    classify_pinched,
    estimate_moment_functions,
    increment_moment_estimate,
    nonconfinement_check,
    sandwich_coeff_max,
    sandwich_coeff_min,
    sandwich_ratio,
    uniform_ellipticity_transience_check,
)
from .simulator import (
    EnsembleStats,
    TrajectoryRecord,
    WalkConfig,
    escape_probe,
    neighborhood_return_probe,
    run_ensemble,
    run_walk,
)
