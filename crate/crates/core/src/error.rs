use num_complex::Complex64;

/// Errors raised anywhere in the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("model not admissible: {0}")]
    NotAdmissible(String),
    #[error("pole at z = {0}")]
    PoleAtPoint(Complex64),
    #[error("singular matrix in {context} (smallest eigenvalue/pivot {smallest:e})")]
    Singular { context: String, smallest: f64 },
    #[error("no convergence in {what}: last residual {residual:e}")]
    NonConvergence { what: String, residual: f64 },
    #[error("truncation failure: {0}")]
    Truncation(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::NotAdmissible(_) | Error::PoleAtPoint(_) => 2,
            Error::NonConvergence { .. } | Error::Truncation(_) => 3,
            Error::Singular { .. } => 3,
            Error::Io(_) | Error::Json(_) | Error::Csv(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
