use std::fmt;

use fdm_core::Error;

/// Command failure, carrying the process exit code class.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or settings (exit 1).
    Usage(String),
    /// Inputs that parse but break a rule (exit 2).
    Validation(String),
    /// Non-finite values during training or sampling (exit 3).
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Validation(_) => 2,
            Self::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "usage error: {m}"),
            Self::Validation(m) => write!(f, "validation failed: {m}"),
            Self::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) => Self::Usage(e.to_string()),
            Error::NonFiniteLoss { .. } => Self::Numerical(e.to_string()),
            Error::Autodiff(fdm_autodiff::Error::NonFinite { .. }) => Self::Numerical(e.to_string()),
            other => Self::Validation(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Validation(e.to_string())
    }
}
