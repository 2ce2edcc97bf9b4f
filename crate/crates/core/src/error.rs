use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter lies outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    /// The grid does not resolve a length scale the operation needs.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// Two objects that must share a grid do not.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A test function or path reaches the quarantined boundary buffer.
    #[error("truncation: {0}")]
    Truncation(String),

    /// A Brownian path left the interior of the field grid.
    #[error("path exited the field interior at t = {time}")]
    PathExit { time: f64 },

    /// `exp` of an argument above the overflow guard.
    #[error("exponential overflow guard tripped: {0}")]
    Overflow(String),

    /// An iterative solver failed to converge.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// A reported quantity left its configured acceptance band.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid binary data: {0}")]
    Format(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
