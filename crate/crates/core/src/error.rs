use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("bad value `{value}` at row {row}: {reason}")]
    BadValue {
        row: usize,
        value: String,
        reason: String,
    },
    #[error("non-positive numeraire at row {0}")]
    NonPositiveNumeraire(usize),
    #[error("non-positive price in column `{column}` at row {row}")]
    NonPositivePrice { row: usize, column: String },
    #[error("time-grid gap at row {0}")]
    TimeGridGap(usize),
    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("degenerate pricing at root")]
    DegenerateRoot,
    #[error("trajectory passes through a node without a hedge (null path)")]
    NullPath,
    #[error("payoff requires tree mode (path-dependent)")]
    RequiresTree,
}

pub type Result<T> = std::result::Result<T, Error>;
