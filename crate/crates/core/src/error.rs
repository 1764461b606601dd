use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("day index {day} out of range (series has {days} complete days)")]
    DayOutOfRange { day: usize, days: usize },

    #[error("insufficient history: {0}")]
    InsufficientHistory(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("model `{0}` requires a solar series but none was provided")]
    MissingSolar(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

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
    /// True for errors caused by the caller's configuration rather than by input data.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::InvalidConfig(_) | Error::UnknownModel(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
