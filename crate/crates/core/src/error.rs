use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The document does not match the descriptor schema.
    #[error("schema error: {0}")]
    Schema(String),

    /// The document parses but a value is outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("descriptor has no spectral components")]
    EmptyDescriptor,

    #[error("range error: {0}")]
    Range(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A finite eigenspace or a floating-point sequence ran out of distinct terms.
    #[error("capacity error: {0}")]
    Capacity(String),
}

impl Error {
    /// Stable upper-case identifier used in diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Schema(_) => "SCHEMA_ERROR",
            Error::Domain(_) => "DOMAIN_ERROR",
            Error::EmptyDescriptor => "EMPTY_DESCRIPTOR",
            Error::Range(_) => "RANGE_ERROR",
            Error::Precondition(_) => "PRECONDITION_ERROR",
            Error::Capacity(_) => "CAPACITY_ERROR",
        }
    }
}
