use thiserror::Error;

/// Errors raised by the numerical laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid parameters: {0}")]
    InvalidGrid(String),

    #[error("time {t} lies outside the noise window [{t_min}, {t_max}]")]
    OutsideWindow { t: f64, t_min: f64, t_max: f64 },

    #[error("time {0} is not a node of the noise grid")]
    NotANode(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("eigensolver failure: {0}")]
    Eigen(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("conjugation factor must be positive, got {0}")]
    NonPositiveFactor(f64),

    #[error("solution blew up at t = {t} (max |c| = {max_abs:e}); reduce dt")]
    BlowUp { t: f64, max_abs: f64 },

    #[error(
        "force Lipschitz constant C_F = {c_f} breaks the dissipativity bound: need C_F < nu/P^2 = {bound}"
    )]
    DissipativityViolated { c_f: f64, bound: f64 },

    #[error("tail window insufficient: need path data before t = {needed}, window starts at {t_min}")]
    TailWindow { needed: f64, t_min: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("step {h:e} is below the cancellation guard {guard:e}")]
    CancellationGuard { h: f64, guard: f64 },

    #[error("attractor estimate did not converge: last gap {last_gap:e} > tol {tol:e}")]
    NonConvergence { last_gap: f64, tol: f64 },

    #[error("empty point set")]
    EmptySet,

    #[error("cache: {0}")]
    Cache(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable machine-readable tag.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid_grid",
            Error::OutsideWindow { .. } => "outside_window",
            Error::NotANode(_) => "not_a_node",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::Eigen(_) => "eigen",
            Error::InvalidConfig(_) => "invalid_config",
            Error::NonPositiveFactor(_) => "non_positive_factor",
            Error::BlowUp { .. } => "blow_up",
            Error::DissipativityViolated { .. } => "dissipativity_violated",
            Error::TailWindow { .. } => "tail_window",
            Error::Degenerate(_) => "degenerate",
            Error::CancellationGuard { .. } => "cancellation_guard",
            Error::NonConvergence { .. } => "non_convergence",
            Error::EmptySet => "empty_set",
            Error::Cache(_) => "cache",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
