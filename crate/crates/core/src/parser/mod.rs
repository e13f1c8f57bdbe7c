//! Text front end: expression grammar, equation files, canonical rendering.
//!
//! Grammar (whitespace-insensitive outside identifiers):
//!
//! ```text
//! equation := expr ('=' expr)?
//! expr     := term (('+' | '-') term)*
//! term     := unary (('*' | '/') unary)*
//! unary    := '-' unary | '+' unary | power
//! power    := primary ('^' unary)?            right-associative
//! primary  := number | ident primes? | call | '(' expr ')'
//! call     := fname ('{' int ',' int ',' int '}')? '(' expr (',' expr)* ')'
//! ```

mod grammar;
mod lexer;
mod model;
mod render;

pub use grammar::{parse_expr, Context, Scope, MAX_DERIVATIVE_ORDER};
pub use model::{parse_equation, parse_equation_file, EquationFile, ModelSpec};
pub use render::render;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("undeclared symbol `{name}` at line {line}, column {col}")]
    Undeclared { name: String, line: usize, col: usize },
    #[error("non-integer exponent on `{field}` at line {line}, column {col}")]
    NonIntegerExponent { field: String, line: usize, col: usize },
    #[error("derivative order {order} exceeds the cap of {cap} at line {line}, column {col}")]
    DerivativeOrder {
        order: usize,
        cap: usize,
        line: usize,
        col: usize,
    },
    #[error("line {line}: {msg}")]
    Header { line: usize, msg: String },
}

impl ParseError {
    pub fn position(&self) -> Option<(usize, usize)> {
        match self {
            ParseError::Syntax { line, col, .. }
            | ParseError::Undeclared { line, col, .. }
            | ParseError::NonIntegerExponent { line, col, .. }
            | ParseError::DerivativeOrder { line, col, .. } => Some((*line, *col)),
            ParseError::Header { line, .. } => Some((*line, 1)),
        }
    }
}
