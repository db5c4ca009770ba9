use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema mismatch: missing columns [{}], unknown columns [{}]", missing.join(", "), unknown.join(", "))]
    Schema { missing: Vec<String>, unknown: Vec<String> },

    #[error("column `{column}` has no values to impute from")]
    EmptyColumn { column: String },

    #[error("cannot parse `{value}` at row {row}, column `{column}`")]
    Parse { row: usize, column: String, value: String },

    #[error("arity mismatch: expected {expected} values, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("record {index} has no label")]
    Unlabeled { index: usize },

    #[error("class {class} has {count} records, need at least {required}")]
    ClassTooSmall { class: u8, count: usize, required: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{tensor}[{index}] = {value} does not fit a signed 16-bit slot")]
    Overflow {
        tensor: &'static str,
        index: usize,
        value: f64,
    },

    #[error("feature {feature} is constant")]
    ConstantFeature { feature: usize },

    #[error(transparent)]
    ModelFile(#[from] ModelFileError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Structured failures while reading a `LOGNNET1` or `HGB1` model file.
/// Line numbers are 1-based.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelFileError {
    #[error("line {line}: bad magic `{found}`, expected `{expected}`")]
    BadMagic {
        line: usize,
        expected: &'static str,
        found: String,
    },

    #[error("line {line}: unsupported format version `{found}`, expected `{expected}`")]
    Version {
        line: usize,
        expected: &'static str,
        found: String,
    },

    #[error("line {line}: section `{section}` expected {expected} {what}, found {found}")]
    Count {
        line: usize,
        section: String,
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("line {line}: value {value} in `{section}` is outside the signed 16-bit range")]
    OutOfRange { line: usize, section: String, value: i64 },

    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}
