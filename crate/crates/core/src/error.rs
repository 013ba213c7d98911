use std::io;

use thiserror::Error;

/// Errors surfaced by the library and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("signal/matrix shape: {0}")]
    Shape(String),

    #[error("need redundancy: m = {m} must exceed n = {n}")]
    NeedRedundancy { m: usize, n: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("columns are not orthonormal (max deviation {0:.3e})")]
    NotOrthonormal(f64),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("oracle system singular")]
    OracleSingular,

    #[error(
        "subset budget exceeded: {required} subsets > {budget}; use the sampled mode for a non-certified bound"
    )]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("malformed matrix container: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
