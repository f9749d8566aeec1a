use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sentence")]
    EmptySentence,
    #[error("span {start}..{end} out of range for {side} side of length {len}")]
    OutOfRange {
        side: &'static str,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("deleting the phrase would empty the {0} side")]
    WouldEmptySide(&'static str),
    #[error("{side} side needs at least {min} tokens, got {len}")]
    SideTooShort {
        side: &'static str,
        min: usize,
        len: usize,
    },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("no candidates to select from")]
    EmptyCandidates,
    #[error("inconsistent deletion history: {0}")]
    InconsistentHistory(String),
    #[error("empty group")]
    EmptyGroup,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("missing gold label for instance {0:?}")]
    MissingGold(String),
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("scorer timed out after {0} ms")]
    Timeout(u64),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag, used by the CLI's single-line error output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptySentence => "empty_sentence",
            Error::OutOfRange { .. } => "out_of_range",
            Error::WouldEmptySide(_) => "would_empty_side",
            Error::SideTooShort { .. } => "side_too_short",
            Error::Shape(_) => "shape_error",
            Error::Parse(_) => "parse_error",
            Error::EmptyCandidates => "empty_candidates",
            Error::InconsistentHistory(_) => "inconsistent_history",
            Error::EmptyGroup => "empty_group",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::MissingGold(_) => "missing_gold",
            Error::DuplicateId(_) => "duplicate_id",
            Error::Timeout(_) => "timeout",
            Error::Protocol(_) => "protocol_error",
            Error::Config(_) => "config_error",
            Error::Io(_) => "io_error",
        }
    }
}
