use std::fmt;
use std::path::Path;

use vsmfarm::Error;

pub const EXIT_PARSE: i32 = 2;
pub const EXIT_TRIM: i32 = 3;
pub const EXIT_MISSING: i32 = 4;
pub const EXIT_SYNTHESIS: i32 = 5;
pub const EXIT_GATE: i32 = 6;
pub const EXIT_OTHER: i32 = 1;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn parse(message: impl Into<String>) -> Self {
        Self::new(EXIT_PARSE, message)
    }

    pub fn missing(path: &Path, e: std::io::Error) -> Self {
        Self::new(EXIT_MISSING, format!("cannot read {}: {e}", path.display()))
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::new(EXIT_OTHER, format!("cannot write {}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse { .. } | Error::Config(_) | Error::UnknownLoop(_) => EXIT_PARSE,
            Error::TrimFailed { .. } | Error::InfeasibleTarget(_) => EXIT_TRIM,
            Error::Synthesis { .. } => EXIT_SYNTHESIS,
            Error::Io { .. } => EXIT_MISSING,
            _ => EXIT_OTHER,
        };
        Self::new(code, e.to_string())
    }
}
