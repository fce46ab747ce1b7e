use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] subfk::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for a failed integrability assumption, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(subfk::Error::AssumptionA(_)) => 2,
            _ => 1,
        }
    }
}
