use serde::{Deserialize, Serialize};
use std::fmt;

/// Source language of a program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Lang {
    #[serde(rename = "java-lite", alias = "java", alias = "JavaLite")]
    JavaLite,
    #[serde(rename = "py-lite", alias = "python", alias = "PyLite")]
    PyLite,
}

impl Lang {
    pub fn as_str(self) -> &'static str {
        match self {
            Lang::JavaLite => "java-lite",
            Lang::PyLite => "py-lite",
        }
    }
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TokenKind {
    Identifier,
    Keyword,
    IntLiteral,
    StringLiteral,
    Operator,
    Punct,
    Newline,
    Indent,
    Dedent,
}

impl TokenKind {
    /// Newline, Indent and Dedent carry layout only.
    pub fn is_layout(self) -> bool {
        matches!(self, TokenKind::Newline | TokenKind::Indent | TokenKind::Dedent)
    }
}

/// Byte range of a token in its source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ByteSpan {
    pub offset: usize,
    pub len: usize,
}

impl ByteSpan {
    pub fn end(&self) -> usize {
        self.offset + self.len
    }
}

/// A lexeme plus the trivia (whitespace and comments) that surrounds it.
///
/// `leading` holds everything between the previous token and this one;
/// `trailing` is only non-empty on the final token of a stream and holds
/// whatever follows it. Concatenating `leading + text + trailing` over a
/// stream reproduces the source byte for byte.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub span: ByteSpan,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub leading: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub trailing: String,
}

impl Token {
    pub fn new(kind: TokenKind, text: impl Into<String>, span: ByteSpan) -> Self {
        Token { kind, text: text.into(), span, leading: String::new(), trailing: String::new() }
    }

    pub fn is(&self, kind: TokenKind, text: &str) -> bool {
        self.kind == kind && self.text == text
    }
}

/// Reassemble source text from a token stream, trivia included.
pub fn render_tokens(tokens: &[Token]) -> String {
    let mut out = String::new();
    for t in tokens {
        out.push_str(&t.leading);
        out.push_str(&t.text);
        out.push_str(&t.trailing);
    }
    out
}
