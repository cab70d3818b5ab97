use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A sample correlation was requested on data with zero variance.
    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("insufficient data: need at least {needed} bits, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("enumeration scale exceeded: sequence length {length} > {max}")]
    Scale { length: usize, max: usize },

    #[error("insufficient adversary budget: {0}")]
    InsufficientBudget(String),

    #[error("transition matrix would have negative entries: {0}")]
    NegativeEntry(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("malformed bit-sequence file: {0}")]
    Format(String),

    #[error("quantile estimation failed: {0}")]
    Quantile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
