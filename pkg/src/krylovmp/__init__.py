"""krylovmp: a mixed-precision preconditioned conjugate gradient lab.

Simulated reduced-precision preconditioner application inside an
otherwise binary64 PCG iteration, with full finite-precision
diagnostics and evaluators for the associated backward/forward error
bounds.
"""

from .bounds import (
    BoundInputs,
    BoundReport,
    assumption_lhs,
    backward_bound,
    bound_report,
    case_table,
    epsilon_pre_terms,
    forward_bound,
    kappa_preconditioned,
    kappa_split_factor,
    residual_gap_bound,
)
from .fpx import (
    BFLOAT16,
    FORMATS,
    FP16,
    FP32,
    FP64,
    FloatFormat,
    fl,
    get_format,
    round_to_format,
    round_vector,
)
from .linalg import (
    LowerTriangular,
    NotPositiveDefinite,
    SpdMatrix,
    a_norm,
    axpy,
    cholesky,
    cond2,
    dot,
    eigvals_spd,
    eigvals_sym_jacobi,
    matvec,
    norm2,
    solve_lower,
    solve_spd,
    solve_upper,
    spectral_norm,
)
from .pcg import (
    ANormErrorMin,
    IterationRecord,
    NoStop,
    PcgTrace,
    PreconditionerScheme,
    RecursiveResidualBelow,
    TrueResidualBelow,
    detect_k_star,
    pcg_run,
    saad_split_run,
)
from .problems import (
    ProblemSpec,
    build_matrix,
    build_preconditioner,
    build_rhs,
    reference_solution,
)

__version__ = "0.1.0"
