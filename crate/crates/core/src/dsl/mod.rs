//! Constraint language: parsing, checking, evaluation, incremental re-checking.
//!
//! Constraint files hold blocks `context <Class> inv <name>: <expr>` with `--`
//! line comments. See [`parser`] for the grammar.

pub mod ast;
mod check;
mod eval;
mod incremental;
mod lexer;
pub mod parser;
mod print;

pub use ast::{BoolOp, CmpOp, CollOp, Constraint, Expr, Feature, Literal, Span};
pub use check::{check_constraints, Ty};
pub use eval::{
    compare, evaluate_constraint, violations_of, Env, Evaluation, Evaluator, ScopeSet, Val,
    Violation,
};
pub use incremental::{recheck, ScopeCache};
pub use parser::parse_unchecked;
pub use print::{constraint_to_string, expr_to_string, pretty_print};

use thiserror::Error;

use crate::model::Metamodel;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslError {
    #[error("{line}:{column}: syntax error: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{line}:{column}: unknown class `{name}`")]
    UnknownClass {
        name: String,
        line: usize,
        column: usize,
    },
    #[error("{line}:{column}: class `{class}` has no attribute or reference `{name}`")]
    UnknownFeature {
        class: String,
        name: String,
        line: usize,
        column: usize,
    },
    #[error("{line}:{column}: unknown variable `{name}`")]
    UnknownVariable {
        name: String,
        line: usize,
        column: usize,
    },
    #[error("{line}:{column}: type error: {message}")]
    Type {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{line}:{column}: duplicate invariant name `{name}`")]
    DuplicateName {
        name: String,
        line: usize,
        column: usize,
    },
}

impl DslError {
    pub fn line(&self) -> usize {
        match self {
            DslError::Syntax { line, .. }
            | DslError::UnknownClass { line, .. }
            | DslError::UnknownFeature { line, .. }
            | DslError::UnknownVariable { line, .. }
            | DslError::Type { line, .. }
            | DslError::DuplicateName { line, .. } => *line,
        }
    }
}

/// Parses a constraint file and resolves it against `mm`.
pub fn parse_constraint_file(text: &str, mm: &Metamodel) -> Result<Vec<Constraint>, DslError> {
    let mut cs = parse_unchecked(text)?;
    check_constraints(&mut cs, mm)?;
    Ok(cs)
}
