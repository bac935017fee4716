use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] cvis::CvisError),

    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid allocation: {0}")]
    Allocation(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;
