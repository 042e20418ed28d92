use thiserror::Error;

/// Unified error type for the valuation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    // Data model and file formats.
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite feature at row {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },
    #[error("label {label} at row {row} is out of range for {v} classes")]
    LabelOutOfRange { row: usize, label: u32, v: usize },
    #[error("duplicate id {0}")]
    DuplicateId(u64),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("label noise needs at least two classes")]
    SingleClassDataset,

    // Transport solvers.
    #[error("exact solver instance of {entries} plan entries exceeds cap {cap}")]
    OracleTooLarge { entries: usize, cap: usize },
    #[error("non-finite intermediate in {0}")]
    NonFiniteIntermediate(&'static str),
    #[error("operation undefined for size {0}")]
    DegenerateSize(usize),
    #[error("plan entry ({row}, {col}) underflowed to zero")]
    ZeroPlanEntry { row: usize, col: usize },

    // Label geometry.
    #[error("label {0} is not covered by the label distance matrix")]
    UnknownLabel(u32),

    // Whole-dataset valuation.
    #[error("cost matrix of {required} entries exceeds memory budget {budget}")]
    MemoryBudgetExceeded { required: usize, budget: usize },

    // Evaluation.
    #[error("corruption mask marks no points")]
    NoCorruptions,

    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, Error>;
