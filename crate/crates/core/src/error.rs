use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain violation: {0}")]
    Domain(String),
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("four-point condition violated at ({0}, {1}, {2}, {3})")]
    FourPoint(usize, usize, usize, usize),
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
