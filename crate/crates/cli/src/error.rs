use std::fmt;

/// Process exit statuses.
pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_DIVERGED: i32 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_IO,
            message: message.into(),
        }
    }

    /// Wraps a library error, prefixing `context` (typically the flag involved).
    pub fn from_lib(context: &str, e: siren2::Error) -> Self {
        use siren2::Error as E;
        let code = match &e {
            E::Io { .. } | E::Json { .. } | E::Malformed { .. } | E::UnsupportedFormat(_) => EXIT_IO,
            E::Diverged { .. } => EXIT_DIVERGED,
            E::InvalidParameter(_)
            | E::ContractViolation(_)
            | E::UnsupportedShape(_)
            | E::UnsupportedGrid
            | E::Aliasing(_)
            | E::ResourceLimit { .. }
            | E::EmptyInput => EXIT_USAGE,
            E::NoConvergence { .. } | E::UndefinedCentroid | E::UndefinedSnr => EXIT_FAILURE,
        };
        let message = if context.is_empty() {
            e.to_string()
        } else {
            format!("{context}: {e}")
        };
        Self { code, message }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// `.ctx("--flag")` on library results.
pub trait Context<T> {
    fn ctx(self, context: &str) -> CliResult<T>;
}

impl<T> Context<T> for siren2::Result<T> {
    fn ctx(self, context: &str) -> CliResult<T> {
        self.map_err(|e| CliError::from_lib(context, e))
    }
}
