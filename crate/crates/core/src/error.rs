use thiserror::Error;

use crate::codebook::Codebook;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or theorem hypothesis is outside the supported domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An exact computation would exceed the configured cell budget.
    #[error("capacity guard: {cells} DP cells requested, cap is {cap}")]
    Capacity { cells: u128, cap: u128 },

    /// Greedy construction ran out of attempts; the partial codebook is kept.
    #[error("codebook shortfall: built {achieved} of {target} codewords within {attempts} attempts")]
    Shortfall {
        achieved: usize,
        target: usize,
        attempts: u64,
        partial: Box<Codebook>,
    },

    #[error("codebook format: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
