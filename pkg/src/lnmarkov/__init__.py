"""Exact discrete-time solver for a one-factor log-normal
Markov-functional interest-rate model, with phase-transition analysis
built on the complex zeros of each slice's generating function."""

from .errors import (
    DivergenceError,
    DomainError,
    InsufficientDataError,
    InvalidInputError,
    ModelError,
    NegativeForwardError,
    NotBracketedError,
    NumericFailureError,
    UnsupportedInputError,
)
from .genfunc import (
    GenFunction,
    build_libor_free,
    evaluate,
    high_vol_libor,
    infinite_vol_limit,
    low_vol_libor,
    zero_vol_limit,
)
from .model import (
    DEFAULT_PRECISION_BITS,
    RebasedCurve,
    TenorModel,
    flat_curve,
    forward_libors,
    read_curve_csv,
    rebase,
    scale,
    write_curve_csv,
)
from .solver import (
    CoefficientMatrix,
    ModelSolution,
    bond,
    libor,
    rebased_bond,
    solve,
    write_libor_csv,
    write_solution_json,
)
from .zeros import (
    CriticalReport,
    DensityJump,
    RootLocus,
    RootSet,
    critical_volatility,
    density_and_jump,
    find_roots,
    measured_kink,
    min_modulus_gap,
    root_locus,
)

__all__ = [
    "DEFAULT_PRECISION_BITS",
    "CoefficientMatrix",
    "CriticalReport",
    "DensityJump",
    "DivergenceError",
    "DomainError",
    "GenFunction",
    "InsufficientDataError",
    "InvalidInputError",
    "ModelError",
    "ModelSolution",
    "NegativeForwardError",
    "NotBracketedError",
    "NumericFailureError",
    "RebasedCurve",
    "RootLocus",
    "RootSet",
    "TenorModel",
    "UnsupportedInputError",
    "bond",
    "build_libor_free",
    "critical_volatility",
    "density_and_jump",
    "evaluate",
    "find_roots",
    "flat_curve",
    "forward_libors",
    "high_vol_libor",
    "infinite_vol_limit",
    "libor",
    "low_vol_libor",
    "measured_kink",
    "min_modulus_gap",
    "rebase",
    "rebased_bond",
    "read_curve_csv",
    "root_locus",
    "scale",
    "solve",
    "write_curve_csv",
    "write_libor_csv",
    "write_solution_json",
    "zero_vol_limit",
]

__version__ = "0.1.0"
