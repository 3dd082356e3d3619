use thiserror::Error;

/// Errors raised by the evaluation engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("line {line}: {message}")]
    MalformedRow { line: u64, message: String },

    #[error("stock {stock}: date {date} is not after the previous row's date {previous}")]
    NonMonotonicDates {
        stock: String,
        date: String,
        previous: String,
    },

    #[error("duplicate row for stock {stock} on {date}")]
    DuplicateRow { stock: String, date: String },

    #[error("stock {stock} on {date}: {message}")]
    InvalidBar {
        stock: String,
        date: String,
        message: String,
    },

    #[error("invalid panel: {0}")]
    InvalidPanel(String),

    #[error("binary cache: {0}")]
    Cache(String),

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("day {day}: fewer than two stocks with data for cross-sectional statistics")]
    InsufficientCrossSection { day: usize },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("design matrix is rank deficient (column {column})")]
    RankDeficient { column: usize },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("{0}")]
    Degenerate(String),

    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Diverged { epoch: usize, loss: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
