use crate::config::ConfigErrors;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("{0}")]
    Config(#[from] ConfigErrors),
    #[error(transparent)]
    Core(#[from] kaclab::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Runtime(String),
}

impl LabError {
    /// Process exit code: 1 for configuration problems, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => 1,
            _ => 2,
        }
    }
}

pub type LabResult<T> = std::result::Result<T, LabError>;
