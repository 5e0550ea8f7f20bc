use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UrnError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid state {state:?}: {reason}")]
    InvalidState { state: (u64, u64), reason: String },

    #[error("horizon {horizon} exceeds the cap of {cap} for {what}")]
    CapExceeded {
        what: &'static str,
        horizon: u64,
        cap: u64,
    },

    #[error("empty batch")]
    EmptyBatch,

    #[error("inconsistent batch: {0}")]
    InconsistentBatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("only {found} usable points in window (need at least {needed})")]
    TooFewPoints { found: usize, needed: usize },

    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),

    #[error("quadrature did not converge: estimated error {estimate:e} exceeds tolerance {tol:e}")]
    NonConvergent { estimate: f64, tol: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, UrnError>;
