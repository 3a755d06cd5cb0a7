"""Two-grid analysis: error propagation spectra and optimal interpolation operators."""

from .errors import *  # noqa: F401,F403
from .identity import complement_rayleigh, spectrum_via_identity, verify_config, verify_identity
from .linalg import (
    cholesky,
    eig_generalized,
    eig_hermitian,
    hpd_sqrt,
    operator_a_norm,
    orthonormal_complement,
    spectral_radius,
    spectrum_general,
)
from .optimal import (
    OptimalInterp,
    eigenvector_equivalence_check,
    kappa_stg,
    kappa_tg,
    kappa_tg_unscaled,
    lemma_max_min,
    optimal_interpolation,
    optimize_nonsym,
    optimize_stg,
    optimize_tg,
    stg_a_norm,
    tg_a_norm,
    tg_rho,
)
from .problems import (
    ProblemSpec,
    geometric_interp_1d,
    laplacian_1d,
    laplacian_2d,
    load_matrix_market,
    random_hpd,
    save_matrix_market,
)
from .runner import ExperimentConfig, Report, compare_interpolations, parse_config, run_experiment
from .smoothers import (
    SmootherOperator,
    SmootherSpec,
    XOperator,
    build_smoother,
    check_convergence_conditions,
    composed_x,
    scale_smoother,
    symmetrized_x,
)
from .twogrid import (
    TwoGridConfig,
    assemble_error_propagation,
    coarse_matrix,
    kvc,
    preconditioner,
    run_cycle_solver,
)

__version__ = "0.1.0"
