//! Split eigenvalues of `-u'' - gamma u^- = lambda u` on an interval and the
//! bifurcation branches of `-Delta_p u - Delta u - gamma u^- = lambda u`
//! that leave them, for `p > 2` (from the trivial solution) and
//! `1 < p < 2` (from infinity, via a norm transform).

pub mod config;
pub mod continuation;
pub mod error;
pub mod grid;
pub mod half_eigen;
pub mod io;
pub mod monotone;
pub mod quasilinear;
pub mod sampling;
pub mod spectrum;
pub mod tridiag;

pub use config::SolverConfig;
pub use continuation::{
    cone_test, decompose, localization_check, ls_residual, recompose, seed_limit, slope_fit, trace_branch,
    trace_branches, Branch, BranchPoint, BranchSeed, ConeParams, LSDecomposition, LocalizationReport, SeedLimit, Side,
    Termination,
};
pub use error::{Error, Result};
pub use grid::{
    apply_laplacian, apply_p_laplacian, dual_norm, inner_l2, norms, pos_neg_parts, solve_laplacian, Field, Grid,
    NormReport,
};
pub use half_eigen::{
    fucik_sweep, gamma_window, half_eigenpair, half_spectrum, shoot_half_eigenvalue, split_eigenvalues, FucikPoint,
    GammaWindow, SplitEigenPair, StartSign,
};
pub use monotone::{
    ball_coercivity, check_vector_inequalities, default_ball_radius, inverse_continuity, monotonicity_sweep,
    newton_original, solve_monotone, solve_monotone_ball, solve_monotone_from, CoercivityReport, MonotonicityReport,
    SolveReport, VectorInequalityReport,
};
pub use quasilinear::{
    energy_original, from_infinity_variable, jacobian_original, jacobian_transformed, residual_original,
    residual_transformed, residual_weak, to_infinity_variable, ProblemParams, TransformedField,
};
pub use spectrum::{discrete_eigenvalue, eigenpair, EigenPair, SpectrumRow};
pub use tridiag::Tridiagonal;
