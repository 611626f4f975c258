//! Two-class error type mapping onto the process exit codes: usage errors
//! (bad flags, malformed config, failed pre-run validation) exit with 1,
//! failures during execution (positivity loss, diverging training, I/O)
//! exit with 2.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// The invocation itself is wrong; nothing was attempted.
    Usage(String),
    /// The command started and failed along the way.
    Runtime(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

/// Shorthand for mapping a library error into the runtime class with a
/// context prefix.
pub trait RuntimeContext<T> {
    fn runtime(self, what: &str) -> Result<T, CliError>;
}

impl<T, E: fmt::Display> RuntimeContext<T> for Result<T, E> {
    fn runtime(self, what: &str) -> Result<T, CliError> {
        self.map_err(|e| CliError::Runtime(format!("{what}: {e}")))
    }
}

/// Shorthand for mapping a validation error into the usage class.
pub trait UsageContext<T> {
    fn usage(self, what: &str) -> Result<T, CliError>;
}

impl<T, E: fmt::Display> UsageContext<T> for Result<T, E> {
    fn usage(self, what: &str) -> Result<T, CliError> {
        self.map_err(|e| CliError::Usage(format!("{what}: {e}")))
    }
}
