//! Hand-written lexers for the two front-ends.
//!
//! Whitespace and comments are never dropped: they are attached to the next
//! token as leading trivia (or to the last token as trailing trivia), so a
//! token stream can always be rendered back to the exact source.
//!
//! java-lite emits a `Newline` token for every `\n`; the parser skips them.
//! py-lite follows the usual offside rule: `Newline` ends a logical line,
//! blank and comment-only lines are trivia, and `Indent`/`Dedent` are
//! zero-width tokens placed before the first token of a line.

use super::token::{ByteSpan, Lang, Token, TokenKind};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("lex error at byte {offset}: {message}")]
pub struct LexError {
    pub offset: usize,
    pub message: String,
}

const JAVA_KEYWORDS: &[&str] = &[
    "int", "boolean", "String", "void", "if", "else", "for", "while", "switch", "case", "default",
    "return", "break", "true", "false",
];

const PY_KEYWORDS: &[&str] = &[
    "def", "if", "elif", "else", "for", "in", "while", "return", "break", "pass", "True", "False",
    "and", "or", "not",
];

pub fn is_keyword(word: &str, lang: Lang) -> bool {
    match lang {
        Lang::JavaLite => JAVA_KEYWORDS.contains(&word),
        Lang::PyLite => PY_KEYWORDS.contains(&word),
    }
}

/// Tokenize `source`, failing on characters or layout outside the subset.
pub fn tokenize(source: &str, lang: Lang) -> Result<Vec<Token>, LexError> {
    Lexer::new(source, lang, false).run()
}

/// Tokenize without ever failing. Unknown characters become `Punct`
/// tokens and indentation errors are absorbed. Used to featurize
/// syntax-broken candidates, which are still consumed as token sequences.
pub fn tokenize_lenient(source: &str, lang: Lang) -> Vec<Token> {
    Lexer::new(source, lang, true).run().expect("lenient lexing is infallible")
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    lang: Lang,
    lenient: bool,
    tokens: Vec<Token>,
    trivia: String,
    indents: Vec<usize>,
    paren_depth: usize,
    at_line_start: bool,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str, lang: Lang, lenient: bool) -> Self {
        Lexer {
            src,
            bytes: src.as_bytes(),
            pos: 0,
            lang,
            lenient,
            tokens: Vec::new(),
            trivia: String::new(),
            indents: vec![0],
            paren_depth: 0,
            at_line_start: true,
        }
    }

    fn err(&self, offset: usize, message: impl Into<String>) -> LexError {
        LexError { offset, message: message.into() }
    }

    fn push(&mut self, kind: TokenKind, start: usize, end: usize) {
        let mut tok = Token::new(kind, &self.src[start..end], ByteSpan { offset: start, len: end - start });
        tok.leading = std::mem::take(&mut self.trivia);
        self.tokens.push(tok);
    }

    fn push_virtual(&mut self, kind: TokenKind, at: usize) {
        self.tokens.push(Token::new(kind, "", ByteSpan { offset: at, len: 0 }));
    }

    fn peek(&self, ahead: usize) -> Option<u8> {
        self.bytes.get(self.pos + ahead).copied()
    }

    fn run(mut self) -> Result<Vec<Token>, LexError> {
        while self.pos < self.bytes.len() {
            if self.lang == Lang::PyLite && self.at_line_start && self.paren_depth == 0 {
                self.line_start()?;
                continue;
            }
            let c = self.bytes[self.pos];
            match c {
                b'\n' => {
                    let start = self.pos;
                    self.pos += 1;
                    match self.lang {
                        Lang::JavaLite => self.push(TokenKind::Newline, start, self.pos),
                        Lang::PyLite if self.paren_depth > 0 => self.trivia.push('\n'),
                        Lang::PyLite => {
                            self.push(TokenKind::Newline, start, self.pos);
                            self.at_line_start = true;
                        }
                    }
                }
                b' ' | b'\t' | b'\r' => {
                    self.trivia.push(c as char);
                    self.pos += 1;
                }
                b'#' if self.lang == Lang::PyLite => self.line_comment(),
                b'/' if self.lang == Lang::JavaLite && self.peek(1) == Some(b'/') => self.line_comment(),
                b'/' if self.lang == Lang::JavaLite && self.peek(1) == Some(b'*') => self.block_comment()?,
                b'"' => self.string()?,
                b'0'..=b'9' => self.number()?,
                c if c == b'_' || c.is_ascii_alphabetic() => self.word(),
                _ => self.symbol()?,
            }
        }
        if self.lang == Lang::PyLite {
            let end = self.bytes.len();
            let needs_newline = self.tokens.last().is_some_and(|t| t.kind != TokenKind::Newline);
            if needs_newline {
                self.push_virtual(TokenKind::Newline, end);
            }
            while self.indents.len() > 1 {
                self.indents.pop();
                self.push_virtual(TokenKind::Dedent, end);
            }
        }
        if let Some(last) = self.tokens.last_mut() {
            last.trailing = std::mem::take(&mut self.trivia);
        }
        Ok(self.tokens)
    }

    /// Measure indentation of a py-lite line; blank and comment-only lines
    /// are swallowed as trivia.
    fn line_start(&mut self) -> Result<(), LexError> {
        let start = self.pos;
        let mut width = 0usize;
        while let Some(c) = self.peek(0) {
            match c {
                b' ' => width += 1,
                b'\t' if !self.lenient => return Err(self.err(self.pos, "tab in indentation")),
                b'\t' => width += 4,
                b'\r' => {}
                _ => break,
            }
            self.pos += 1;
        }
        self.trivia.push_str(&self.src[start..self.pos]);
        match self.peek(0) {
            None => return Ok(()),
            Some(b'\n') => {
                self.trivia.push('\n');
                self.pos += 1;
                return Ok(());
            }
            Some(b'#') => {
                self.line_comment();
                if self.peek(0) == Some(b'\n') {
                    self.trivia.push('\n');
                    self.pos += 1;
                }
                return Ok(());
            }
            _ => {}
        }
        self.at_line_start = false;
        let current = *self.indents.last().unwrap();
        if width > current {
            self.indents.push(width);
            self.push_virtual(TokenKind::Indent, self.pos);
        } else if width < current {
            while width < *self.indents.last().unwrap() {
                self.indents.pop();
                self.push_virtual(TokenKind::Dedent, self.pos);
            }
            if width != *self.indents.last().unwrap() {
                if !self.lenient {
                    return Err(self.err(self.pos, "dedent does not match any outer indentation level"));
                }
                self.indents.push(width);
            }
        }
        Ok(())
    }

    fn line_comment(&mut self) {
        let start = self.pos;
        while let Some(c) = self.peek(0) {
            if c == b'\n' {
                break;
            }
            self.pos += 1;
        }
        self.trivia.push_str(&self.src[start..self.pos]);
    }

    fn block_comment(&mut self) -> Result<(), LexError> {
        let start = self.pos;
        match self.src[start + 2..].find("*/") {
            Some(rel) => {
                self.pos = start + 2 + rel + 2;
                self.trivia.push_str(&self.src[start..self.pos]);
                Ok(())
            }
            None if self.lenient => {
                self.pos = self.bytes.len();
                self.trivia.push_str(&self.src[start..]);
                Ok(())
            }
            None => Err(self.err(start, "unterminated block comment")),
        }
    }

    fn string(&mut self) -> Result<(), LexError> {
        let start = self.pos;
        self.pos += 1;
        loop {
            match self.peek(0) {
                Some(b'"') => {
                    self.pos += 1;
                    break;
                }
                Some(b'\\') => {
                    match self.peek(1) {
                        Some(b'"' | b'\\' | b'n' | b't') => {}
                        _ if self.lenient => {}
                        _ => return Err(self.err(self.pos, "unsupported escape sequence")),
                    }
                    self.pos += 2.min(self.bytes.len() - self.pos);
                }
                Some(b'\n') | None => {
                    if self.lenient {
                        break;
                    }
                    return Err(self.err(start, "unterminated string literal"));
                }
                Some(_) => {
                    // Advance one full UTF-8 character.
                    let ch = self.src[self.pos..].chars().next().unwrap();
                    self.pos += ch.len_utf8();
                }
            }
        }
        self.push(TokenKind::StringLiteral, start, self.pos);
        Ok(())
    }

    fn number(&mut self) -> Result<(), LexError> {
        let start = self.pos;
        while self.peek(0).is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if !self.lenient && self.src[start..self.pos].parse::<i64>().is_err() {
            return Err(self.err(start, "integer literal out of 64-bit range"));
        }
        self.push(TokenKind::IntLiteral, start, self.pos);
        Ok(())
    }

    fn word(&mut self) {
        let start = self.pos;
        while self.peek(0).is_some_and(|c| c == b'_' || c.is_ascii_alphanumeric()) {
            self.pos += 1;
        }
        let kind = if is_keyword(&self.src[start..self.pos], self.lang) {
            TokenKind::Keyword
        } else {
            TokenKind::Identifier
        };
        self.push(kind, start, self.pos);
    }

    fn symbol(&mut self) -> Result<(), LexError> {
        let start = self.pos;
        let c = self.bytes[start];
        let next = self.peek(1);
        let two = |a: u8, b: u8| c == a && next == Some(b);
        let (kind, len) = match self.lang {
            Lang::JavaLite if two(b'&', b'&') || two(b'|', b'|') => (TokenKind::Operator, 2),
            Lang::PyLite if two(b'/', b'/') => (TokenKind::Operator, 2),
            _ if two(b'=', b'=') || two(b'!', b'=') || two(b'<', b'=') || two(b'>', b'=') => {
                (TokenKind::Operator, 2)
            }
            _ => match c {
                b'+' | b'-' | b'*' | b'%' | b'<' | b'>' | b'=' => (TokenKind::Operator, 1),
                b'/' if self.lang == Lang::JavaLite => (TokenKind::Operator, 1),
                b'!' if self.lang == Lang::JavaLite => (TokenKind::Operator, 1),
                b'(' | b')' | b',' | b':' => (TokenKind::Punct, 1),
                b'{' | b'}' | b';' | b'.' if self.lang == Lang::JavaLite => (TokenKind::Punct, 1),
                _ if self.lenient => {
                    let ch = self.src[start..].chars().next().unwrap();
                    (TokenKind::Punct, ch.len_utf8())
                }
                _ => {
                    let ch = self.src[start..].chars().next().unwrap();
                    return Err(self.err(start, format!("unexpected character {ch:?}")));
                }
            },
        };
        match c {
            b'(' => self.paren_depth += 1,
            b')' => self.paren_depth = self.paren_depth.saturating_sub(1),
            _ => {}
        }
        self.pos += len;
        self.push(kind, start, self.pos);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::token::render_tokens;

    fn kinds(tokens: &[Token]) -> Vec<(TokenKind, &str)> {
        tokens.iter().map(|t| (t.kind, t.text.as_str())).collect()
    }

    #[test]
    fn java_declaration() {
        let toks = tokenize("int x = 0;", Lang::JavaLite).unwrap();
        assert_eq!(
            kinds(&toks),
            vec![
                (TokenKind::Keyword, "int"),
                (TokenKind::Identifier, "x"),
                (TokenKind::Operator, "="),
                (TokenKind::IntLiteral, "0"),
                (TokenKind::Punct, ";"),
            ]
        );
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("", Lang::JavaLite).unwrap().is_empty());
        assert!(tokenize("", Lang::PyLite).unwrap().is_empty());
    }

    #[test]
    fn py_indent_dedent() {
        let toks = tokenize("def f():\n  return 1\n", Lang::PyLite).unwrap();
        let indents = toks.iter().filter(|t| t.kind == TokenKind::Indent).count();
        let dedents = toks.iter().filter(|t| t.kind == TokenKind::Dedent).count();
        assert_eq!((indents, dedents), (1, 1));
        assert_eq!(render_tokens(&toks), "def f():\n  return 1\n");
    }

    #[test]
    fn py_blank_and_comment_lines_are_trivia() {
        let src = "def f():\n\n    # note\n    x = 1\n    return x\n";
        let toks = tokenize(src, Lang::PyLite).unwrap();
        assert_eq!(toks.iter().filter(|t| t.kind == TokenKind::Indent).count(), 1);
        assert_eq!(toks.iter().filter(|t| t.kind == TokenKind::Newline).count(), 3);
        assert_eq!(render_tokens(&toks), src);
    }

    #[test]
    fn py_bad_dedent() {
        let err = tokenize("def f():\n    x = 1\n  y = 2\n", Lang::PyLite).unwrap_err();
        assert!(err.message.contains("dedent"));
        assert!(tokenize("def f():\n\tx = 1\n", Lang::PyLite).is_err());
    }

    #[test]
    fn illegal_character() {
        let err = tokenize("int x = 0 @ 1;", Lang::JavaLite).unwrap_err();
        assert_eq!(err.offset, 10);
        let toks = tokenize_lenient("int x = 0 @ 1;", Lang::JavaLite);
        assert!(toks.iter().any(|t| t.is(TokenKind::Punct, "@")));
    }

    #[test]
    fn java_comments_round_trip() {
        let src = "/* header */\nint f(int a) { // c\n  return a / 2; }\n  ";
        let toks = tokenize(src, Lang::JavaLite).unwrap();
        assert_eq!(render_tokens(&toks), src);
        assert!(toks.iter().any(|t| t.is(TokenKind::Operator, "/")));
    }

    #[test]
    fn spans_are_ordered() {
        let src = "def g(a, b):\n    if a >= b:\n        return \"x\\n\"\n    return a // b\n";
        let toks = tokenize(src, Lang::PyLite).unwrap();
        let mut last_end = 0;
        for t in &toks {
            assert!(t.span.offset >= last_end);
            assert_eq!(&src[t.span.offset..t.span.end()], t.text);
            last_end = t.span.end();
        }
    }

    #[test]
    fn int_overflow_rejected() {
        assert!(tokenize("x = 99999999999999999999", Lang::PyLite).is_err());
    }
}
