"""Normalized gonosomal evolution operators of a two-type bisexual population."""

from .analysis import (
    BasinResult,
    FixedPointDescriptor,
    TrajectoryRecord,
    classify_basin,
    eigenvalues_at,
    enumerate_fixed_points,
    iterate,
)
from .core import (
    DomainError,
    GonodynError,
    GonosomalParams,
    InheritanceTensor,
    NonConvergenceError,
    NumericalDegeneracyError,
    ReducedPoint,
    SimplexPoint,
    ValidationError,
    reduce,
    validate_tensor,
)
from .explore import TracedCurve, basin_sweep, trace_curve
from .operators import apply, apply_general, apply_reduced, apply_W, lift
from .series import (
    InvariantCurve,
    PowerSeries,
    compose_series,
    solve_case1,
    solve_case2,
    verify_invariant_curve,
)

__version__ = "0.1.0"
