//! The textual rule language: AST, parser, printer and static checks.
//!
//! ```text
//! rule(R1: group(OR: element(A: BusinessActor), element(A: BusinessRole))
//!          -> element(B: "Participant/Pool") { name = A.name })
//! ```
//!
//! Source terms query the model (`element`, `relation`, `group` with
//! `AND`/`OR`/`XOR`), optionally refined by search conditions `[name = "x"]`
//! and loop constraints `{count >= 1}`. Target terms create elements and
//! relations, enrich objects returned by transformation references
//! (`ref(Rule, Arg)`), or bind `*` placeholders to such references.

mod ast;
mod deps;
mod lexer;
mod parser;
mod print;
mod validate;

use thiserror::Error;

pub use ast::*;
pub use deps::{dependency_graph, redundant_rules, source_signature, DependencyGraph};
pub use parser::{parse_rule_set, parse_value_expression};
pub use validate::{validate_rule_set, Diagnostic, DiagnosticKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("{location}: {message}")]
    Syntax { location: Location, message: String },
    #[error("{location}: duplicate rule name `{name}`")]
    DuplicateRule { name: String, location: Location },
}

impl ParseError {
    pub(crate) fn syntax(location: Location, message: impl Into<String>) -> Self {
        ParseError::Syntax { location, message: message.into() }
    }

    pub fn location(&self) -> Location {
        match self {
            ParseError::Syntax { location, .. } | ParseError::DuplicateRule { location, .. } => *location,
        }
    }
}
