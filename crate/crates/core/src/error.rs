use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("simulation diverged at step {step}: {reason}")]
    Diverged { step: usize, reason: String },

    #[error("CFL violation: {0}")]
    Cfl(String),

    #[error("domain too small: {0}")]
    DomainTooSmall(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("experiment failed: {0}")]
    Experiment(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl LabError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        LabError::InvalidArgument(msg.into())
    }

    /// True for errors caused by user-supplied configuration rather than a
    /// runtime failure. Drives the CLI exit code.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            LabError::Config(_)
                | LabError::Cfl(_)
                | LabError::InvalidArgument(_)
                | LabError::Hypothesis(_)
                | LabError::Json(_)
                | LabError::Unsupported(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
