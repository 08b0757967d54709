"""Eigenanalysis of the Laplace pencil on spline spaces with C0 partitioning."""

from .assembly import (
    DiscreteSystem,
    SymSparseMatrix,
    apply_dirichlet,
    assemble_1d,
    build_system,
    dof_count,
    kron_assemble,
    nnz_mass_formula,
    write_matrix_market,
)
from .bspline import (
    BasisEval,
    KnotVector,
    SplineSpace,
    continuity_at,
    eval_basis,
    insert_separators,
    make_open_uniform_knots,
    make_spline_space,
    open_uniform_space,
)
from .eigensolver import (
    CountMismatch,
    EigenResult,
    LanczosState,
    RitzPair,
    SliceResult,
    lanczos_extend,
    operator_apply,
    rayleigh_ritz,
    solve_slice,
    solve_spectrum,
    thick_restart,
    tridiag_eig,
)
from .sparsela import (
    CostCounters,
    LDLFactorization,
    NegativeNorm,
    OpCounter,
    ZeroPivot,
    factor_ldl,
    m_inner,
    m_norm,
    mass_matvec,
    nested_dissection_graph,
    separator_ordering,
    solve_fb,
)
from .verify import (
    ErrorRecord,
    ExactMode,
    error_metrics,
    evaluate_eigenfunction,
    exact_spectrum,
    match_and_normalize,
)

__version__ = "0.1.0"
