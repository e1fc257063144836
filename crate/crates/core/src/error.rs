use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} is outside {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    /// Quadrature or series evaluation ran out of budget. Carries the best
    /// estimate and its error bound so callers can still report something.
    #[error("accuracy target not reached: estimate {estimate:e}, error bound {error:e}")]
    Accuracy { estimate: f64, error: f64 },

    #[error("invalid weight spec: {0}")]
    InvalidSpec(String),

    #[error("oscillating construction stopped at depth {depth}: {reason}")]
    Construction { depth: usize, reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("size limit exceeded: {0}")]
    Size(String),

    /// A file that could not be read or parsed; the message carries the position.
    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

