use std::fmt;

use trackforge_core::Error;

/// Why a command failed, which decides the exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, unreadable or malformed input, invalid configuration.
    Usage(String),
    /// Something the program guarantees did not hold.
    Internal(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Internal(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InvalidBox(_)
            | Error::InvalidMeasurement(_)
            | Error::Dimension { .. }
            | Error::Layout { .. }
            | Error::PrecisionOverflow(_)
            | Error::Config(_)
            | Error::Parse { .. }
            | Error::Consistency(_)
            | Error::Input(_)
            | Error::UndefinedMetric(_)
            | Error::Io { .. }
            | Error::Json(_) => Failure::Usage(msg),
            _ => Failure::Internal(msg),
        }
    }
}

pub fn io_failure(path: &std::path::Path, e: std::io::Error) -> Failure {
    Failure::Usage(format!("{}: {e}", path.display()))
}
