use thiserror::Error;

/// Exit code for success.
pub const EXIT_OK: i32 = 0;
/// Exit code when a reproduction or certification check fails.
pub const EXIT_FAILED: i32 = 1;
/// Exit code for bad input.
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{origin}: parse error at byte {offset}: {message}")]
    Parse { origin: String, offset: usize, message: String },
    #[error("unsupported schema_version {found} (expected {expected})")]
    Schema { found: u64, expected: u64 },
    #[error("bad {what} '{input}': {reason}")]
    Spec { what: &'static str, input: String, reason: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Core(#[from] belldist::Error),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn spec(what: &'static str, input: &str, reason: impl Into<String>) -> Self {
        Self::Spec { what, input: input.to_string(), reason: reason.into() }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), message: e.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Internal(_) | Self::Core(belldist::Error::Falsified { .. }) => EXIT_FAILED,
            _ => EXIT_INPUT,
        }
    }
}
