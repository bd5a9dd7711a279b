use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("index {index} out of range for population of {size}")]
    Index { index: usize, size: usize },

    #[error("non-finite value {0}")]
    NonFinite(f64),

    #[error("value {value} outside [{lo}, {hi}]")]
    Range { value: f64, lo: f64, hi: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("graph generation failed after {attempts} attempts: {reason}")]
    Generation { attempts: usize, reason: String },

    #[error("graph is not strongly connected")]
    NotStronglyConnected,

    #[error("row {0} has no nonzero entry")]
    ZeroRow(usize),

    #[error("{folds} folds do not evenly divide {questions} questions")]
    Partition { folds: usize, questions: usize },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by malformed input files rather than bad arguments or numerics.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Schema(_) | Error::Io(_) | Error::Csv(_) | Error::Json(_)
        )
    }

    pub fn is_numeric_error(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_) | Error::NotStronglyConnected | Error::Generation { .. }
        )
    }
}
