use grushin_core::Error;

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad or incomplete configuration: exit code 2.
    Config(String),
    /// A probe ran but did not establish what was asked: exit code 1.
    Probe(String),
    /// Numerical or I/O failure while running: exit code 1.
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Probe(_) | CliError::Run(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Probe(m) => write!(f, "probe failed: {m}"),
            CliError::Run(m) => write!(f, "run failed: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Domain(_) => CliError::Config(e.to_string()),
            Error::Unsupported(_) => CliError::Probe(e.to_string()),
            Error::Internal(_) | Error::Io(_) | Error::Json(_) => CliError::Run(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(format!("i/o error: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Run(format!("json error: {e}"))
    }
}
