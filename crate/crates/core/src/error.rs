use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("value {value} outside [0, 1]")]
    Domain { value: f64 },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("state space too large: {states} configurations (limit {limit})")]
    StateSpaceTooLarge { states: u128, limit: u128 },

    #[error("no cycle detected within {0} steps")]
    StepLimit(u64),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("correlation fitness needs at most 2 labels, found {0}")]
    TooManyLabels(usize),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported model version: {0}")]
    Version(String),

    #[error("record {id}: illegal character {ch:?} at offset {offset}")]
    IllegalResidue { id: String, ch: char, offset: usize },

    #[error("line {line}: column {column}: attribute {value} outside [0, 1]")]
    AttributeRange {
        line: usize,
        column: usize,
        value: f64,
    },

    #[error("sequence too short: length {len}, need at least {min}")]
    TooShort { len: usize, min: usize },

    #[error("region {start}..{end} invalid for sequence length {len}")]
    Region {
        start: usize,
        end: usize,
        len: usize,
    },

    #[error("window calls not sorted by start")]
    Unsorted,
}
