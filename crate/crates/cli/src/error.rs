use std::fmt;
use std::process::ExitCode;

/// Failure classes, each mapped to a fixed exit status.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Resonance(String),
    Arithmetic(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Resonance(_) => 3,
            CliError::Arithmetic(_) => 4,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, msg) = match self {
            CliError::Usage(m) => ("usage error", m),
            CliError::Data(m) => ("error", m),
            CliError::Resonance(m) => ("resonance", m),
            CliError::Arithmetic(m) => ("arithmetic error", m),
        };
        write!(f, "{kind}: {msg}")
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<chess_billiard::io::IoError> for CliError {
    fn from(e: chess_billiard::io::IoError) -> Self {
        CliError::Data(e.to_string())
    }
}
