//! The B-language subset: tokens, syntax trees, parsing, printing and typing.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod types;

use thiserror::Error;

pub use ast::{BinOp, Expr, ExprKind, Node, Pred, PredKind, RelOp, Term, UnOp};
pub use lexer::{tokenize, Loc, Token, TokenKind};
pub use parser::{parse_expr, parse_pred, Parser};
pub use printer::{print_expr, print_pred};
pub use types::{typecheck_expr, typecheck_pred, typecheck_terms, BType, TermMut, TypeEnv, TypeError};

/// Lexical or syntax error.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{loc}: {message}")]
pub struct SyntaxError {
    pub loc: Loc,
    pub message: String,
}

impl SyntaxError {
    pub fn new(loc: Loc, message: impl Into<String>) -> Self {
        Self { loc, message: message.into() }
    }
}

/// Tokenizes and parses a predicate.
pub fn pred_from_str(src: &str) -> Result<Pred, SyntaxError> {
    parse_pred(&tokenize(src)?)
}

/// Tokenizes and parses an expression.
pub fn expr_from_str(src: &str) -> Result<Expr, SyntaxError> {
    parse_expr(&tokenize(src)?)
}
