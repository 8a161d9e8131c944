use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    Domain(String),

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("resolution too coarse: r/h = {ratio:.3}, need at least {required}")]
    Resolution { ratio: f64, required: f64 },

    #[error("resolution infeasible: {0}")]
    ResolutionInfeasible(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::DomainMismatch(_)
                | Error::GridMismatch(_)
                | Error::InvalidInput(_)
                | Error::Parse(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
