use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed parameters: bad set variant, non-positive exponent, etc.
    #[error("configuration error: {0}")]
    Config(String),
    /// Inputs outside the operation's domain (point not in the set, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// No applicable construction exists for the requested configuration.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! config_err {
    ($($arg:tt)*) => { $crate::error::Error::Config(format!($($arg)*)) };
}
macro_rules! domain_err {
    ($($arg:tt)*) => { $crate::error::Error::Domain(format!($($arg)*)) };
}
pub(crate) use config_err;
pub(crate) use domain_err;
