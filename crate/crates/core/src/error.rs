use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid kernel: {field}: {reason}")]
    InvalidKernel { field: String, reason: String },

    #[error("malformed kernel JSON: {0}")]
    KernelJson(#[from] serde_json::Error),

    #[error("root iteration for degree {degree} did not converge (residual {residual:e})")]
    NonConvergence { degree: usize, residual: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
