use thiserror::Error;

use super::ast::Variable;
use crate::rdf::{Iri, ParseError, SyntaxError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuleError {
    #[error("{0}")]
    Document(#[from] ParseError),
    #[error("syntax error at {0}")]
    Syntax(SyntaxError),
    #[error("unknown builtin '{name}' at {line}:{column}")]
    UnknownBuiltin {
        name: String,
        line: usize,
        column: usize,
    },
    #[error("rule {rule}: unsafe head variable(s) {}", fmt_vars(.variables))]
    UnsafeHead { rule: Iri, variables: Vec<Variable> },
    #[error("rule {rule}: {message}")]
    Invalid { rule: Iri, message: String },
}

impl RuleError {
    /// Document line/column when the error has one.
    pub fn location(&self) -> Option<(usize, usize)> {
        match self {
            RuleError::Document(e) => Some(e.location()),
            RuleError::Syntax(e) => Some((e.line, e.column)),
            RuleError::UnknownBuiltin { line, column, .. } => Some((*line, *column)),
            _ => None,
        }
    }
}

fn fmt_vars(vars: &[Variable]) -> String {
    vars.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}
