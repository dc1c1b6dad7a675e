//! Lexing, parsing, printing, and interpretation for the java-lite and
//! py-lite front-ends.

pub mod ast;
pub mod fixtures;
pub mod interp;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod program;
pub mod token;

pub use ast::SyntaxTree;
pub use interp::{execute, observe, Execution, FaultKind, IoMode, RuntimeFault, Value, DEFAULT_FUEL};
pub use lexer::{tokenize, tokenize_lenient, LexError};
pub use parser::{parse, ParseError};
pub use printer::print;
pub use program::{IoPair, ParsedProgram, Program};
pub use token::{render_tokens, Lang, Token, TokenKind};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SourceError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Tokenize and parse in one step.
pub fn parse_source(source: &str, lang: Lang) -> Result<SyntaxTree, SourceError> {
    let tokens = tokenize(source, lang)?;
    Ok(parse(&tokens, lang)?)
}
