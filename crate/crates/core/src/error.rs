use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// Variants fall into three families that the CLI maps onto exit codes:
/// input/validation problems, numerical degeneracy, and configuration misuse.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unbalanced panel: unit `{unit}` is missing {missing} period(s)")]
    Balance { unit: String, missing: usize },

    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },

    #[error("duplicate observation for unit `{unit}` at time `{time}`")]
    Duplicate { unit: String, time: String },

    #[error("invalid panel shape: {0}")]
    Shape(String),

    #[error("group {group} is empty; groups must partition the units")]
    Partition { group: usize },

    #[error("group label {label} is outside 1..={n_groups}")]
    Label { label: usize, n_groups: usize },

    #[error("matrix is singular or indefinite (pivot {pivot})")]
    Singular { pivot: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("replication index {rep} out of range for {reps} replications")]
    Index { rep: usize, reps: usize },

    #[error("empty input: {0}")]
    Empty(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by numerically degenerate data (singular
    /// grams, zero variances) rather than malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Singular { .. } | Error::Degenerate(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
