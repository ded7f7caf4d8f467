use thiserror::Error;

use crate::grid::Field;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid exponent p = {p}: {reason}")]
    InvalidExponent { p: f64, reason: &'static str },

    #[error("index k = {k} out of range 1..={max}")]
    IndexOutOfRange { k: usize, max: usize },

    #[error("input field is identically zero")]
    ZeroField,

    #[error("nonpositive Fucik parameters ({lambda_plus}, {lambda_minus})")]
    NonpositiveParameters { lambda_plus: f64, lambda_minus: f64 },

    #[error("gamma = {gamma} outside the admissible window [0, {gamma_max}) for k = {k}")]
    GammaOutsideWindow { k: usize, gamma: f64, gamma_max: f64 },

    #[error("root bracketing failed: {0}")]
    Bracketing(String),

    #[error("singular p-Laplacian weight: zero element gradient with 1 < p < 2 and no regularization")]
    SingularWeight,

    #[error("singular linear system")]
    SingularSystem,

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        best: Box<Field>,
    },

    #[error("iterate left the ball of radius {radius} (norm {norm:.3e})")]
    LeftBall { radius: f64, norm: f64 },

    #[error("coercivity sample {sample:.3e} is not positive; radius {radius} is too large")]
    NotCoercive { radius: f64, sample: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("seeding corrector failed at lambda = {lambda}: {reason}")]
    SeedFailure { lambda: f64, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
