use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] fck_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// 2 for bad input, 1 for anything that went wrong while computing.
    pub fn exit_code(&self) -> i32 {
        use fck_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::Json(_) => 2,
            CliError::Core(E::Parse(_) | E::Domain(_) | E::Dimension(_) | E::SizeLimit { .. } | E::Precondition(_)) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
