use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error: {value} outside tabulated range [{lo}, {hi}]")]
    Range { value: f64, lo: f64, hi: f64 },

    #[error("quadrature did not converge: {what} (estimate {estimate:e}, error {error:e}, {evaluations} evaluations)")]
    Quadrature {
        what: String,
        estimate: f64,
        error: f64,
        evaluations: usize,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("singular configuration: {0}")]
    Singular(String),

    #[error("unstable ratio: denominator {value:e} is within 3 standard errors ({stderr:e}) of zero")]
    UnstableRatio { value: f64, stderr: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
