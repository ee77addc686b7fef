use thiserror::Error;

/// Library-wide error type.
///
/// `InvalidInput` covers parameter and configuration mistakes made by the
/// caller. `Numerical` covers failures detected while computing: loss of
/// positivity, divergent step control, out-of-range evaluation and similar
/// conditions that indicate the mathematics, not the plumbing, went wrong.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    Config(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// Process exit code for the CLI: configuration and i/o problems exit
    /// with 2, mathematical check failures with 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) => 1,
            _ => 2,
        }
    }
}
