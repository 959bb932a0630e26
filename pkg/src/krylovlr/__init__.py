"""Matrix-free Krylov methods for near-optimal low-rank approximation."""

from .estimators import KrylovLowRank
from .kernels import (
    DEFAULT_DROP_TOL,
    OrthonormalBasis,
    eigh_small,
    mgs_extend,
    principal_angle_distance,
)
from .metrics import (
    EPSILON_FLOOR,
    GapReport,
    GoodnessReport,
    chi_square_min_check,
    epsilon_empirical,
    floor_epsilon,
    gap_report,
    kl_goodness,
    perturbation_transfer_check,
    schatten_pipeline,
    schatten_residual,
    singular_value_errors,
    spectral_error_transfers_from_gram,
)
from .operators import (
    DenseGram,
    DiagonalGram,
    DiagonalPerturbation,
    GramOperator,
    perturb_diagonal,
    recommended_delta,
)
from .solvers import (
    DegenerateStartError,
    InsufficientSubspaceError,
    SimulatedStart,
    SolverConfig,
    SolverResult,
    block_krylov,
    build_simulated_block,
    lanczos_local_extend,
    simultaneous_iteration,
    single_vector_krylov,
    single_vector_simultaneous,
)
from .spectra import SpectrumSpec, as_operator, generate, read_matrix_market

__version__ = "0.1.0"

__all__ = [
    "KrylovLowRank",
    "DEFAULT_DROP_TOL",
    "OrthonormalBasis",
    "eigh_small",
    "mgs_extend",
    "principal_angle_distance",
    "EPSILON_FLOOR",
    "GapReport",
    "GoodnessReport",
    "chi_square_min_check",
    "epsilon_empirical",
    "floor_epsilon",
    "gap_report",
    "kl_goodness",
    "perturbation_transfer_check",
    "schatten_pipeline",
    "schatten_residual",
    "singular_value_errors",
    "spectral_error_transfers_from_gram",
    "DenseGram",
    "DiagonalGram",
    "DiagonalPerturbation",
    "GramOperator",
    "perturb_diagonal",
    "recommended_delta",
    "DegenerateStartError",
    "InsufficientSubspaceError",
    "SimulatedStart",
    "SolverConfig",
    "SolverResult",
    "block_krylov",
    "build_simulated_block",
    "lanczos_local_extend",
    "simultaneous_iteration",
    "single_vector_krylov",
    "single_vector_simultaneous",
    "SpectrumSpec",
    "as_operator",
    "generate",
    "read_matrix_market",
]
