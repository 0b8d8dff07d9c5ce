use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration: {0}")]
    Config(String),
    #[error("domain: {0}")]
    Domain(String),
    #[error("resource: {what} exceeded cap {cap}")]
    Resource { what: String, cap: u64 },
    #[error("parse at byte {offset}: {msg}")]
    Parse { offset: usize, msg: String },
    #[error("convergence: {0}")]
    Convergence(String),
    #[error("unreachable state: {0}")]
    Unreachable(String),
    #[error("reconstruction at forest vertex {vertex}: {msg}")]
    Reconstruction { vertex: usize, msg: String },
    #[error("integrity: {0}")]
    Integrity(String),
    #[error("unsupported model: {0}")]
    Unsupported(String),
    #[error("internal: {0}")]
    Internal(String),
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable tag, used as the CLI error prefix.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Domain(_) => "domain",
            Error::Resource { .. } => "resource",
            Error::Parse { .. } => "parse",
            Error::Convergence(_) => "convergence",
            Error::Unreachable(_) => "unreachable",
            Error::Reconstruction { .. } => "reconstruction",
            Error::Integrity(_) => "integrity",
            Error::Unsupported(_) => "unsupported",
            Error::Internal(_) => "internal",
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn resource(what: impl Into<String>, cap: u64) -> Self {
        Error::Resource { what: what.into(), cap }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
