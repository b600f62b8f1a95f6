use std::fmt;
use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Where in the input a string came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    /// 1-based position in the list handed to validation.
    String(usize),
    /// 1-based line of a plain input file.
    Line(usize),
    /// 1-based record of a FASTA file.
    Record(usize),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::String(i) => write!(f, "string {i}"),
            Location::Line(i) => write!(f, "line {i}"),
            Location::Record(i) => write!(f, "record {i}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: at least one string is required")]
    EmptyInput,
    #[error("{at}: empty string (strings need at least one symbol)")]
    EmptyString { at: Location },
    #[error("{at}: unknown symbol {symbol:?} at column {column}")]
    UnknownSymbol {
        at: Location,
        symbol: char,
        column: usize,
    },
    #[error("{at}: length {found} differs from the first string's length {expected}")]
    UnequalLength {
        at: Location,
        expected: usize,
        found: usize,
    },
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),
    #[error("malformed input: {0}")]
    MalformedInput(String),

    #[error("{}: corrupt sequence file: {reason}", path.display())]
    CorruptFile { path: PathBuf, reason: String },
    #[error("value {value} does not fit a {kind} element")]
    ValueOutOfRange { value: u64, kind: &'static str },
    #[error("{}: too many open files (raise the open-file limit, at least k + 8 descriptors are needed)", path.display())]
    TooManyOpenFiles { path: PathBuf },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("length mismatch in {what}: expected {expected}, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: u64,
        found: u64,
    },
    #[error("missing column {0}")]
    MissingColumn(String),
    #[error("rank of label {label} exceeds its column length")]
    RankOverflow { label: usize },
    #[error("internal invariant violated: {0}")]
    InvariantViolation(String),

    #[error("label {label} occurs a different number of times than its part has elements")]
    LabelCountMismatch { label: usize },
    #[error("label {label} out of range for {parts} parts")]
    LabelOutOfRange { label: usize, parts: usize },

    #[error("instance with {positions} positions exceeds the oracle limit of {limit}")]
    TooLargeForOracle { positions: usize, limit: usize },

    #[error("{}: working directory is not empty (use --force to reuse it)", .0.display())]
    WorkdirNotEmpty(PathBuf),
    #[error("verification failed: {what} differs from the oracle at index {index}")]
    VerifyMismatch { what: &'static str, index: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        let path = path.into();
        if source.raw_os_error() == Some(24) {
            Error::TooManyOpenFiles { path }
        } else {
            Error::Io { path, source }
        }
    }

    /// True for problems with the user's input or configuration rather than the run itself.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::EmptyInput
                | Error::EmptyString { .. }
                | Error::UnknownSymbol { .. }
                | Error::UnequalLength { .. }
                | Error::InvalidAlphabet(_)
                | Error::MalformedInput(_)
                | Error::WorkdirNotEmpty(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
