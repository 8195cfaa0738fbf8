use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid scale grid: {reason}")]
    InvalidGrid { reason: String },

    #[error("scale too large: n = {scale} for series length {len}")]
    ScaleTooLarge { scale: usize, len: usize },

    #[error("scale too small: n = {scale} (minimum 4)")]
    ScaleTooSmall { scale: usize },

    #[error("degenerate fit: segment length {len} too short for order {order}")]
    DegenerateFit { len: usize, order: usize },

    #[error("detrending order {order} not supported (0..=4)")]
    UnsupportedOrder { order: usize },

    #[error("degenerate series at scale {scale}: zero detrended variance")]
    DegenerateAtScale { scale: usize },

    #[error("singular or ill-conditioned correlation matrix at scale {scale}")]
    SingularAtScale { scale: usize },

    #[error("collinear inputs")]
    Collinear,

    #[error("all scales degenerate")]
    AllScalesDegenerate,

    #[error("unknown variable label: {0}")]
    UnknownLabel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("too many failed replications: {failed} of {total} (budget 1%)")]
    TooManyFailedReps { failed: usize, total: usize },

    #[error("grid mismatch between statistic and critical curve")]
    GridMismatch,

    #[error("missing column: {0}")]
    MissingColumn(String),

    #[error("no valid rows in {0}")]
    NoValidRows(String),

    #[error("data too sparse: {dropped} of {total} rows dropped")]
    TooSparse { dropped: usize, total: usize },

    #[error("empty season: {0}")]
    EmptySeason(String),

    #[error("timestamps not strictly increasing at row {row}")]
    NonMonotonicTimestamps { row: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
