use std::path::Path;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const PARSE: i32 = 3;
    pub const PROTOCOL: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("{0}")]
    Other(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Parse(_) => exit::PARSE,
            CliError::Protocol(_) => exit::PROTOCOL,
            CliError::Other(_) => exit::OTHER,
        }
    }

    pub(crate) fn io(path: &Path, err: std::io::Error) -> Self {
        if err.kind() == std::io::ErrorKind::NotFound {
            CliError::Config(format!("{}: no such file", path.display()))
        } else {
            CliError::Other(anyhow::anyhow!("{}: {err}", path.display()))
        }
    }
}

impl From<memimprint::Error> for CliError {
    fn from(err: memimprint::Error) -> Self {
        use memimprint::Error as E;
        match err {
            E::Config(_) | E::InvalidParams(_) | E::UndefinedAverage => CliError::Config(err.to_string()),
            E::Schema(_) | E::Validation(_) | E::OrderingViolation { .. } | E::NotFound(_) => {
                CliError::Parse(err.to_string())
            }
            E::ProtocolViolation(msg) => CliError::Protocol(msg),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
