//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by model specification, data generation, search and
/// order selection.
#[derive(Debug, Error)]
pub enum Error {
    /// A model or signal specification violates its invariants.
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    /// The data is too short for the requested lags or split.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// The output signal has (numerically) zero norm; ERR is undefined.
    #[error("degenerate output: y has zero norm")]
    DegenerateOutput,

    /// A recursive simulation left the overflow guard.
    #[error("unstable simulation at sample {index}: |y| exceeded {guard:e}")]
    Unstable { index: usize, guard: f64 },

    /// Free-run prediction diverged; carries the mean squared error
    /// accumulated before divergence.
    #[error("free-run prediction diverged at validation sample {index} (partial E = {partial_e:e})")]
    PredictionDiverged { index: usize, partial_e: f64 },

    /// An information-criterion argument is outside its domain.
    #[error("criterion domain error: {0}")]
    Domain(String),

    /// A subset operation received an unusable subset (too small, not a
    /// strict subset, no candidates left, ...).
    #[error("subset error: {0}")]
    Subset(String),

    /// Exhaustive subset evaluation would exceed the combination budget.
    #[error("exhaustive mode over budget: {combinations} subsets exceed the limit of {budget}")]
    ExhaustiveBudget { combinations: u128, budget: u128 },

    /// Unknown benchmark system name.
    #[error("unknown system `{0}` (expected S1..S8 or duffing)")]
    UnknownSystem(String),

    /// Invalid experiment configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Malformed persisted artifact (CSV/JSON).
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
