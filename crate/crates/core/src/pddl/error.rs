use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::sexpr::Position;

/// Syntax-level failure categories, in precedence order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SyntaxErrorKind {
    NoPDDL,
    PError,
    UToken,
}

impl SyntaxErrorKind {
    pub const ALL: [SyntaxErrorKind; 3] = [SyntaxErrorKind::NoPDDL, SyntaxErrorKind::PError, SyntaxErrorKind::UToken];

    pub fn name(self) -> &'static str {
        match self {
            SyntaxErrorKind::NoPDDL => "NoPDDL",
            SyntaxErrorKind::PError => "PError",
            SyntaxErrorKind::UToken => "UToken",
        }
    }
}

/// Semantic problems in a ground-truth domain or problem file.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("duplicate {kind} `{name}`")]
    Duplicate { kind: &'static str, name: String },
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("type `{0}` is part of a cycle in the type hierarchy")]
    TypeCycle(String),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("predicate `{predicate}` expects {expected} arguments, got {found}")]
    Arity { predicate: String, expected: usize, found: usize },
    #[error("`{name}` of type `{found}` is not a `{expected}`")]
    IllTyped { name: String, expected: String, found: String },
    #[error("variable `{variable}` in action `{action}` is not a parameter")]
    UnboundVariable { action: String, variable: String },
    #[error("problem targets domain `{found}`, expected `{expected}`")]
    DomainMismatch { expected: String, found: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("no PDDL found in input")]
    NoPddl,
    #[error("parenthesis mismatch at {pos}: {detail}")]
    Paren { pos: Position, detail: String },
    #[error("unexpected token `{token}` at {pos}, expected {expected}")]
    UnexpectedToken { pos: Position, token: String, expected: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl ParseError {
    /// The syntax subclass for this failure, or `None` for semantic errors.
    pub fn syntax_kind(&self) -> Option<SyntaxErrorKind> {
        match self {
            ParseError::NoPddl => Some(SyntaxErrorKind::NoPDDL),
            ParseError::Paren { .. } => Some(SyntaxErrorKind::PError),
            ParseError::UnexpectedToken { .. } => Some(SyntaxErrorKind::UToken),
            ParseError::Model(_) => None,
        }
    }

    pub(crate) fn unexpected(pos: Position, token: impl Into<String>, expected: impl Into<String>) -> Self {
        ParseError::UnexpectedToken { pos, token: token.into(), expected: expected.into() }
    }
}
