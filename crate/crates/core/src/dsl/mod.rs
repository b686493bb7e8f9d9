//! Assertion language: lexer, parser, canonical formatter, type checker
//! and evaluator.

pub mod ast;
pub mod compile;
pub mod eval;
pub mod format;
pub mod lexer;
pub mod parser;

pub use compile::{compile, compile_document, Builtin, Dim, Node, Ty};
pub use format::format;
pub use parser::parse;

use serde::Serialize;
use std::fmt;

/// A located error with the set of tokens that would have been accepted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub expected: Vec<String>,
}

impl Diagnostic {
    pub fn new(line: usize, column: usize, message: String) -> Self {
        Diagnostic { line, column, message, expected: Vec::new() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected one of: {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl std::error::Error for Diagnostic {}
