use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("annotation {id}: span [{start}, {end}) is outside the document (length {len})")]
    Bounds { id: String, start: usize, end: usize, len: usize },

    #[error("annotation {id}: surface {found:?} does not match document text {expected:?}")]
    SurfaceMismatch { id: String, expected: String, found: String },

    #[error("line {line}: unsupported annotation feature: {feature}")]
    Unsupported { line: usize, feature: String },

    #[error("invalid entity type {0:?}")]
    InvalidType(String),

    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: annotation file has no paired .txt", path.display())]
    MissingText { path: PathBuf },

    #[error("document ids not present in the reference corpus: {}", missing.join(", "))]
    IdMismatch { missing: Vec<String> },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("duplicate model name {0:?}")]
    DuplicateModel(String),

    #[error("vote from model {0:?} which is not an ensemble member")]
    NonMember(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cannot train on an empty corpus")]
    EmptyCorpus,

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("model file line {line}: {message}")]
    ModelFormat { line: usize, message: String },
}

impl Error {
    /// The innermost error, without file and line context.
    pub fn root_cause(&self) -> &Error {
        match self {
            Error::InFile { source, .. } | Error::AtLine { source, .. } => source.root_cause(),
            other => other,
        }
    }

    pub(crate) fn at_line(self, line: usize) -> Self {
        Error::AtLine { line, source: Box::new(self) }
    }

    pub(crate) fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::InFile { path: path.into(), source: Box::new(self) }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
