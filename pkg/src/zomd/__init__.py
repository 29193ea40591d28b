"""Gradient-free mirror descent on the probability simplex.

Two-point and directional gradient estimators built from random directions
on l1/l2/linf spheres (plus Rademacher, coordinate, and scaled-Gaussian
test vectors), a noisy value oracle with bounded adversarial channels, an
entropic dual-averaging solver with the step schedules that give the
known convergence guarantees, and a Monte-Carlo verification harness for
the statistical identities the estimators are supposed to satisfy.

Hot loops run through numba-compiled kernels when numba is importable; a
vectorized numpy fallback produces bit-identical random streams. Select
with the ZOMD_BACKEND environment variable (numba | numpy | auto).
"""

from .backend import HAS_NUMBA, active_backend
from .estimators import (
    EstimatorConfig,
    Family,
    GradientEstimate,
    directional_exact,
    draws_per_estimate,
    estimate,
    l1_volume_ratio,
    l2_ball_points,
    smoothed_gradient_fd,
    smoothed_two_point,
    smoothed_value,
    subgradient,
    surface_to_volume,
    z_finite_diff,
    z_scheme,
)
from .oracle import (
    ChannelKind,
    DomainError,
    NoiseChannel,
    Oracle,
    OracleResponse,
    call_count,
    query_pair,
)
from .problems import (
    MU0,
    ProblemKind,
    StochasticProblem,
    l2_dist_to_simplex,
    make_problem,
    optimality_gap,
    project_to_simplex,
    random_simplex_point,
    uniform_point,
)
from .rng import RngStream
from .sampling import (
    Direction,
    Scheme,
    sample_direction,
    sample_directions,
    surface_normal,
)
from .solver import (
    DualState,
    RunReport,
    Schedule,
    TuneResult,
    make_schedule,
    md_step,
    run,
    trace_grid,
    tune_theorem2,
    tune_theorem3,
)
from .verify import CheckRow, second_moment_bounds, verify_suite

__version__ = "0.1.0"

__all__ = [
    "CheckRow", "ChannelKind", "Direction", "DomainError", "DualState",
    "EstimatorConfig", "Family", "GradientEstimate", "HAS_NUMBA", "MU0",
    "NoiseChannel", "Oracle", "OracleResponse", "ProblemKind", "RngStream",
    "RunReport", "Schedule", "Scheme", "StochasticProblem", "TuneResult",
    "active_backend", "call_count", "directional_exact",
    "draws_per_estimate", "estimate", "l1_volume_ratio", "l2_ball_points",
    "l2_dist_to_simplex", "make_problem", "make_schedule", "md_step",
    "optimality_gap", "project_to_simplex", "query_pair",
    "random_simplex_point", "run", "sample_direction", "sample_directions",
    "second_moment_bounds", "smoothed_gradient_fd", "smoothed_two_point",
    "smoothed_value", "subgradient", "surface_normal", "surface_to_volume",
    "trace_grid", "tune_theorem2", "tune_theorem3", "uniform_point",
    "verify_suite", "z_finite_diff", "z_scheme",
]
