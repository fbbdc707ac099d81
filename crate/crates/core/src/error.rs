use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A pointwise formula was evaluated outside its admissible set.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("fields live on different grids or have mismatched lengths")]
    GridMismatch,

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("root-find for the total volume increment failed: {0} (time step too large?)")]
    RootFind(String),

    #[error("picard iteration failed after {iterations} iterations (relative update {residual:e})")]
    PicardDiverged { iterations: usize, residual: f64 },

    #[error("equilibrium classification requires beta_tilde < 1, got {0}")]
    ClassificationInvalid(f64),

    #[error("non-positive temperature {value} in cell {cell}")]
    NonPositiveTemperature { cell: usize, value: f64 },

    #[error("step failed at t = {t}: {source}")]
    StepFailed {
        t: f64,
        #[source]
        source: Box<Error>,
    },
}
