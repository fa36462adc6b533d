"""Solvers for multi-term Sylvester and Lyapunov-plus-positive equations.

Splitting-based fixed-point iterations accelerated by cycling reduced rank
extrapolation, in a dense small-scale variant and a low-rank large-scale
variant with inexact inner solves (low-rank ADI or extended Krylov).
"""

from .dense import (
    SchurForm,
    apply_operator,
    dense_residual_norm,
    dense_sylvester_solve,
    real_schur,
    solve_quasi_triangular_sylvester,
    svd,
    thin_qr,
)
from .errors import (
    DivergedError,
    InvalidInputError,
    InvalidWindowError,
    MatrixMarketError,
    MtsylvError,
    NoUniqueSolutionError,
    NumericalFailureError,
    OracleTooLargeError,
    ShiftFailureError,
    SpectraOverlapError,
)
from .inner import (
    InnerConfig,
    InnerResult,
    ShiftSets,
    eksm_solve,
    heuristic_shifts,
    lr_adi_solve,
    solve_inner,
)
from .lowrank import (
    LowRankTriple,
    assemble_rhs,
    concat,
    residual_matvec,
    residual_rmatvec,
    separate_rhs,
    spectral_norm,
    truncate,
)
from .mmio import matrix_market_read, matrix_market_write
from .oracles import (
    IterationMatrix,
    VectorizedSystem,
    direct_solve_vec,
    iteration_spectrum,
    kron_assemble,
    rre_reference,
)
from .outer import (
    IterationTrace,
    SolverConfig,
    TraceRecord,
    estimate_residual_spectral_norm,
    nonstationary_lowrank_solve,
    stationary_dense_solve,
)
from .problem import ProblemSpec
from .problems import (
    GeneratorParams,
    gen_advdiff,
    gen_multiterm_sylvester,
    gen_random_dense,
)
from .rre import (
    RreCoefficients,
    extrapolate_dense,
    extrapolate_lowrank,
    rre_coefficients,
)

__version__ = "0.1.0"
