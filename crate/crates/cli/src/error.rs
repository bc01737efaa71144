use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("oracle cap exceeded: {0}")]
    Cap(String),

    #[error("certificate inconsistency: {0}")]
    Inconsistent(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::Cap(_) => 4,
            CliError::Inconsistent(_) => 5,
        }
    }
}

impl From<epigauge::Error> for CliError {
    fn from(e: epigauge::Error) -> Self {
        if matches!(e, epigauge::Error::GridCap { .. }) {
            CliError::Cap(e.to_string())
        } else if e.is_certificate_inconsistency() {
            CliError::Inconsistent(e.to_string())
        } else {
            CliError::Precondition(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
