use thiserror::Error;

use crate::surface::Span;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{span}: syntax error: {msg}")]
    Syntax { span: Span, msg: String },
    #[error("{span}: {msg}")]
    Resolve { span: Span, msg: String },
    #[error("{span}: type error: {msg}")]
    Type { span: Span, msg: String },
    #[error("{span}: expansion error: {msg}")]
    Expand { span: Span, msg: String },
    #[error("cannot print: {0}")]
    Print(String),
    #[error("{0}")]
    Config(String),
    /// Expanded code the evaluator cannot run; indicates an expansion bug.
    #[error("cannot evaluate: {0}")]
    Eval(String),
}

impl Error {
    pub fn span(&self) -> Option<Span> {
        match self {
            Error::Syntax { span, .. }
            | Error::Resolve { span, .. }
            | Error::Type { span, .. }
            | Error::Expand { span, .. } => Some(*span),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
