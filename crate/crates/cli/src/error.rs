use thiserror::Error;

/// Workflow errors; [`CliError::exit_code`] maps them to process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] magnon_core::Error),
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), source }
    }

    /// 2 for configuration problems, 3 for backend size limits, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        use magnon_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::UnknownLabel(_) | E::UnknownMaterial(_) | E::UnknownNoisePreset(_)) => 2,
            CliError::Core(E::SizeLimit { .. } | E::MemoryBudget(_)) => 3,
            _ => 1,
        }
    }
}
