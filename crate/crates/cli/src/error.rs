use std::fmt;

use rough_pam::Error;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration; the message starts with the field path.
    Config(String),
    Core(Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn field(path: &str, msg: impl fmt::Display) -> Self {
        CliError::Config(format!("{path}: {msg}"))
    }

    /// 2 config error, 3 numeric failure, 4 contract violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(Error::Domain(_) | Error::Resolution(_) | Error::Shape(_)) => 2,
            CliError::Core(Error::Contract(_)) => 4,
            CliError::Core(_) | CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.into())
    }
}
