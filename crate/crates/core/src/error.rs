use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("kernel evaluated at coincident points")]
    Singularity,

    #[error("adaptive quadrature exceeded depth {depth} on panel {panel} (target node {target})")]
    Quadrature { panel: usize, target: usize, depth: usize },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("invalid configuration field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("Chebyshev fit on [{a}, {b}] did not converge at degree {degree}; split the interval")]
    FitFailed { a: f64, b: f64, degree: usize },

    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
