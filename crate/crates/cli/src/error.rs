use std::path::PathBuf;

use thiserror::Error;

/// Outcome classes and their process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitClass {
    Success = 0,
    VerificationFailed = 1,
    Internal = 2,
    Refused = 3,
    NoConvergence = 4,
}

impl ExitClass {
    pub fn code(self) -> i32 {
        self as i32
    }

    pub fn status(self) -> &'static str {
        match self {
            ExitClass::Success => "ok",
            ExitClass::VerificationFailed => "verification_failed",
            ExitClass::Internal => "error",
            ExitClass::Refused => "refused",
            ExitClass::NoConvergence => "not_converged",
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {context}: {message}")]
    Parse { context: String, message: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] proxnet_core::Error),
}

impl CliError {
    pub fn exit_class(&self) -> ExitClass {
        use proxnet_core::Error as E;
        match self {
            CliError::Core(E::NotContractive { .. } | E::NotRecurrent { .. }) => ExitClass::Refused,
            CliError::Core(E::MaxIterExceeded { .. }) => ExitClass::NoConvergence,
            _ => ExitClass::Internal,
        }
    }
}
