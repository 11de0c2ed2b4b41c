use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes or dimensions passed to an operation disagree with its contract.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A weight-normalized row whose direction vector has zero norm.
    #[error("singular parameter: direction vector of output channel {channel} has zero norm")]
    SingularParameter { channel: usize },

    /// Backward called with a cache that does not belong to a matching forward pass.
    #[error("state error: {0}")]
    State(String),

    #[error("non-finite gradient at optimizer step {step}")]
    NonFiniteGradient { step: usize },

    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),

    #[error("linear probe diverged after {step} steps; retry with a smaller learning rate than {lr}")]
    Divergence { step: usize, lr: f64 },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Dataset ingestion failures. Line numbers are 1-based.
#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("file contains no series")]
    Empty,
    #[error("line {line}: non-numeric value {value:?}")]
    NonNumeric { line: usize, value: String },
    #[error("line {line}: missing value inside the series")]
    InteriorNan { line: usize },
    #[error("missing @data section")]
    MissingData,
    #[error("line {line}: dimensions have unequal lengths")]
    RaggedDimensions { line: usize },
    #[error("line {line}: class token {token:?} not declared in @classLabel")]
    UnknownClass { line: usize, token: String },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("column {0:?} not found in header")]
    MissingColumn(String),
    #[error("column has no valid values")]
    NoValidValues,
}

/// Model file failures.
#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("bad magic bytes {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported model format version {0}")]
    VersionMismatch(u32),
    #[error("model file truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("trailing data after parameters ({0} bytes)")]
    TrailingData(usize),
    #[error("invalid encoder configuration in model file: {0}")]
    InvalidConfig(String),
}
