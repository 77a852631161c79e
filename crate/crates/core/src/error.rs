use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A configuration value is missing, malformed, or out of range.
    #[error("configuration error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    /// An argument lies outside the domain of a numeric operation.
    #[error("{op}: argument {value} outside domain {domain}")]
    Domain {
        op: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("{op}: no convergence after {iterations} iterations")]
    NoConvergence { op: &'static str, iterations: usize },

    #[error("{op}: rate of {requested} bits is infeasible (at most {max} bits)")]
    Infeasible {
        op: &'static str,
        requested: u64,
        max: u64,
    },

    #[error("modulation order {bits} exceeds the constellation cap of {cap} bits")]
    ConstellationCap { bits: u32, cap: u32 },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
