use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("occupation holds {photons} photons but the space truncates at {limit}")]
    Truncation { photons: usize, limit: usize },

    #[error("space mismatch: {0}")]
    Space(String),

    #[error("cannot normalize a zero vector")]
    ZeroNorm,

    #[error("invalid specification: {0}")]
    Spec(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error(
        "fit did not converge after {iterations} iterations \
         (best loss {best_loss_db} dB, scale {best_scale}, residual {best_residual})"
    )]
    Fit {
        iterations: usize,
        best_loss_db: f64,
        best_scale: f64,
        best_residual: f64,
    },

    #[error("{}: {message}", path.display())]
    Config { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn spec_err(msg: impl Into<String>) -> Error {
    Error::Spec(msg.into())
}
