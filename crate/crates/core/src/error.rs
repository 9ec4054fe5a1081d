//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by data handling, model building and solving.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-positive price for asset '{asset}' at row {row}: {value}")]
    NonPositivePrice { asset: String, row: usize, value: f64 },

    #[error("missing cell survived cleaning for asset '{asset}' at row {row}")]
    GapRemaining { asset: String, row: usize },

    #[error("every asset was removed during cleaning")]
    EmptyUniverse,

    #[error("sector '{0}' lost all members during cleaning")]
    EmptySector(String),

    #[error("window [{start}, {end}) out of range for {len} observations")]
    WindowOutOfRange { start: usize, end: usize, len: usize },

    #[error("no ratio quarter at or before {0}")]
    NoRatioData(chrono::NaiveDate),

    #[error("column {0} is constant; correlation scaling undefined")]
    DegenerateColumn(usize),

    #[error("eigendecomposition did not converge after {0} sweeps")]
    EigDecompositionFailure(usize),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("problem is infeasible{}", .0.as_ref().map(|m| format!(": {m}")).unwrap_or_default())]
    Infeasible(Option<String>),

    #[error("problem is unbounded")]
    Unbounded,

    #[error("iteration limit of {0} reached")]
    IterationLimit(usize),

    #[error("variable bounds conflict with the budget constraint: {0}")]
    InfeasibleBounds(String),

    #[error("sector '{sector}' has {size} assets; at least {needed} required")]
    SectorTooSmall { sector: String, size: usize, needed: usize },

    #[error("pooled support has {size} assets; at least {needed} required")]
    SupportTooSmall { size: usize, needed: usize },

    #[error("worst-tail mean is zero; ratio undefined")]
    ZeroDenominator,

    #[error("need at least {needed} return observations, got {got}")]
    DataTooShort { needed: usize, got: usize },

    #[error("phase '{0}' falls outside the available data")]
    PhaseOutOfRange(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
