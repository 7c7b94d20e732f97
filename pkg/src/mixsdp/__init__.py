"""Low-rank coordinate descent (the Mixing method) for unit-diagonal SDPs."""

from .certificate import Certificate, certify, dual_vector, min_eigenvalue
from .core import (
    AUTO,
    FactorMatrix,
    InputError,
    OptionError,
    ParseError,
    SolveOptions,
    SolveResult,
    SparseCost,
    TraceRecord,
    build_cost,
    default_rank,
    objective,
    parse_cost,
    random_init,
)
from .mixing import MixingState, SweepReport, fixed_point_residual, safe_theta, solve, sweep, sweep_step

__all__ = [
    "AUTO",
    "Certificate",
    "FactorMatrix",
    "InputError",
    "MixingState",
    "OptionError",
    "ParseError",
    "SolveOptions",
    "SolveResult",
    "SparseCost",
    "SweepReport",
    "TraceRecord",
    "build_cost",
    "certify",
    "default_rank",
    "dual_vector",
    "fixed_point_residual",
    "min_eigenvalue",
    "objective",
    "parse_cost",
    "random_init",
    "safe_theta",
    "solve",
    "sweep",
    "sweep_step",
]
