use alloc::string::String;

use crate::corpus::FieldTag;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("name {0:?} is empty after normalization")]
    EmptyName(String),
    #[error("duplicate {kind} id {id:?}")]
    DuplicateId { kind: &'static str, id: String },
    #[error("person {person:?} references unknown paper {paper:?}")]
    DanglingPaper { person: String, paper: String },
    #[error("invalid {kind} {id:?}: {reason}")]
    InvalidRecord {
        kind: &'static str,
        id: String,
        reason: String,
    },
    #[error("unknown paper {0:?}")]
    UnknownPaper(String),
    #[error("unknown person {0:?}")]
    UnknownPerson(String),
    #[error("paper {paper:?} has no author slot {index}")]
    BadTarget { paper: String, index: usize },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("same-coauthor ratio needs at least 2 candidates, got {0}")]
    UndefinedRatio(usize),
    #[error("no {0:?} training documents with at least two tokens")]
    EmptyVocabulary(FieldTag),
    #[error("shape mismatch: expected width {expected}, found {found}")]
    Shape { expected: usize, found: usize },
    #[error("training set contains a single class")]
    SingleClass,
    #[error("gold person {0:?} missing from ranked list")]
    MissingGold(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
}

impl Error {
    /// Numeric failures (divergence, NaN) as opposed to bad input data.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFinite(_))
    }
}
