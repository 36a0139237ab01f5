//! CrossGL lexing and parsing.

mod crossgl;
pub mod lexer;
pub mod parser;

pub use crossgl::parse_module;
pub use lexer::{tokenize, tokenize_with, LexError, LexRules, Token, TokenKind};
pub use parser::{CrossGlDialect, Dialect, ParseError, Parser};

use thiserror::Error;

use crate::ir::{Diagnostic, ShaderModule};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrontendError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

impl FrontendError {
    pub fn to_diagnostic(&self) -> Diagnostic {
        match self {
            FrontendError::Lex(e) => Diagnostic::error(e.location.clone(), e.message.clone()),
            FrontendError::Parse(e) => {
                Diagnostic::error(e.location.clone(), format!("expected {}, found {}", e.expected, e.found))
            }
        }
    }
}

/// Tokenizes and parses CrossGL source text.
pub fn parse_source(source: &str, file: &str) -> Result<ShaderModule, FrontendError> {
    let tokens = tokenize(source, file)?;
    Ok(parse_module(&tokens)?)
}
