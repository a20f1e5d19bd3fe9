//! Error types shared by the parser and the semantic layer.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PddlError {
    #[error("syntax error at {line}:{col}: expected {expected}")]
    SyntaxError {
        line: usize,
        col: usize,
        expected: String,
    },
    #[error("predicate `{predicate}` expects {expected} arguments, got {got}")]
    ArityMismatch {
        predicate: String,
        expected: usize,
        got: usize,
    },
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("stream `{stream}`: output `{var}` also appears in :inputs/:domain")]
    OutputMentionedInDomain { stream: String, var: String },
    #[error("stream `{stream}`: {detail}")]
    OutputUnused { stream: String, detail: String },
    #[error("action `{action}` is not applicable: {reason}")]
    NotApplicable { action: String, reason: String },
}

pub type Result<T> = std::result::Result<T, PddlError>;
