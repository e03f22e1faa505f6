use std::fmt;

/// Position inside a text document, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("degenerate rotation: {0}")]
    DegenerateRotation(&'static str),
    #[error("matrix is not a rotation (orthonormality error {0:e})")]
    NotARotation(f64),
    #[error("degenerate facing frame: lateral direction is parallel to the up axis")]
    DegenerateFrame,
    #[error("size mismatch: {what} (expected {expected}, got {got})")]
    SizeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: i64, len: usize },
    #[error("invalid skeleton: {0}")]
    InvalidSkeleton(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: Position, msg: String },
    #[error("unsupported channel `{name}` at {pos}")]
    UnsupportedChannel { name: String, pos: Position },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("row {row} is not stochastic (sum {sum})")]
    NotStochastic { row: usize, sum: f64 },
    #[error("empty mesh")]
    EmptyMesh,
    #[error("empty point set")]
    EmptySet,
    #[error("frame time must be positive, got {0}")]
    NonPositiveDt(f64),
    #[error("skinning weights are unidentifiable: every training pose is the rest pose")]
    Unidentifiable,
    #[error("optimization diverged (non-finite loss at iteration {0})")]
    NonFinite(usize),
    #[error("skeleton has no root joint")]
    NoRoot,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(line: usize, column: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            pos: Position { line, column },
            msg: msg.into(),
        }
    }

    pub(crate) fn size(what: &'static str, expected: usize, got: usize) -> Self {
        Error::SizeMismatch {
            what,
            expected,
            got,
        }
    }

    /// True for errors that come from malformed input files.
    pub fn is_parse_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::UnsupportedChannel { .. }
                | Error::Schema(_)
                | Error::NotStochastic { .. }
                | Error::ShapeMismatch(_)
                | Error::SizeMismatch { .. }
                | Error::IndexOutOfRange { .. }
                | Error::InvalidSkeleton(_)
                | Error::Io { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
