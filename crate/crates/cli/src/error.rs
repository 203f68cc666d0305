use thiserror::Error;
use witt_core::WittError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] WittError),
    #[error("{0}")]
    CheckFailed(String),
}

impl CliError {
    /// 1 for failed checks, 2 for usage and input errors, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::CheckFailed(_) => 1,
            CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::Core(e) => match e {
                WittError::SingularFrame
                | WittError::DomainGuard(_)
                | WittError::NotLightlike(_)
                | WittError::NegativeSpeedSquare(_)
                | WittError::StepOutOfDomain(_)
                | WittError::NonFinite(_)
                | WittError::ShootingDiverged(_)
                | WittError::BadTrajectory(_) => 3,
                _ => 2,
            },
        }
    }

    /// Name of the error variant, used as the message prefix.
    pub fn kind(&self) -> String {
        match self {
            CliError::Core(e) => format!("{e:?}").split(['(', ' ', '{']).next().unwrap_or("WittError").to_string(),
            CliError::Usage(_) => "Usage".into(),
            CliError::Io { .. } => "Io".into(),
            CliError::CheckFailed(_) => "CheckFailed".into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
