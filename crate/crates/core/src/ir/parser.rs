//! Recursive-descent parsers for java-lite and py-lite.

use super::ast::*;
use super::token::{Lang, Token, TokenKind};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at byte {offset}: expected {expected}, found {found}")]
pub struct ParseError {
    pub offset: usize,
    pub expected: String,
    pub found: String,
}

pub fn parse(tokens: &[Token], lang: Lang) -> Result<SyntaxTree, ParseError> {
    // java-lite is free-form; its Newline tokens only matter to line-level
    // text operators.
    let toks: Vec<&Token> = match lang {
        Lang::JavaLite => tokens.iter().filter(|t| t.kind != TokenKind::Newline).collect(),
        Lang::PyLite => tokens.iter().collect(),
    };
    let end_offset = tokens.last().map(|t| t.span.end()).unwrap_or(0);
    let mut p = Parser { toks, pos: 0, lang, end_offset };
    let root = match lang {
        Lang::JavaLite => p.java_unit()?,
        Lang::PyLite => p.py_unit()?,
    };
    Ok(SyntaxTree { lang, root })
}

pub(crate) fn unescape(lexeme: &str) -> String {
    let inner = lexeme.strip_prefix('"').unwrap_or(lexeme);
    let inner = inner.strip_suffix('"').unwrap_or(inner);
    let mut out = String::with_capacity(inner.len());
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('n') => out.push('\n'),
                Some('t') => out.push('\t'),
                Some(other) => out.push(other),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

struct Parser<'a> {
    toks: Vec<&'a Token>,
    pos: usize,
    lang: Lang,
    end_offset: usize,
}

type PResult<T> = Result<T, ParseError>;

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos).copied()
    }

    fn peek_at(&self, ahead: usize) -> Option<&'a Token> {
        self.toks.get(self.pos + ahead).copied()
    }

    fn at(&self, kind: TokenKind, text: &str) -> bool {
        self.peek().is_some_and(|t| t.is(kind, text))
    }

    fn at_kind(&self, kind: TokenKind) -> bool {
        self.peek().is_some_and(|t| t.kind == kind)
    }

    fn error(&self, expected: impl Into<String>) -> ParseError {
        match self.peek() {
            Some(t) => ParseError {
                offset: t.span.offset,
                expected: expected.into(),
                found: if t.text.is_empty() { format!("{:?}", t.kind) } else { format!("{:?}", t.text) },
            },
            None => ParseError { offset: self.end_offset, expected: expected.into(), found: "end of input".into() },
        }
    }

    fn bump(&mut self) -> &'a Token {
        let t = self.toks[self.pos];
        self.pos += 1;
        t
    }

    fn expect(&mut self, kind: TokenKind, text: &str) -> PResult<&'a Token> {
        if self.at(kind, text) {
            Ok(self.bump())
        } else {
            Err(self.error(format!("{text:?}")))
        }
    }

    fn expect_ident(&mut self) -> PResult<String> {
        if self.at_kind(TokenKind::Identifier) {
            Ok(self.bump().text.clone())
        } else {
            Err(self.error("identifier"))
        }
    }

    fn start(&self) -> usize {
        self.peek().map(|t| t.span.offset).unwrap_or(self.end_offset)
    }

    fn last_end(&self) -> usize {
        self.pos.checked_sub(1).map(|i| self.toks[i].span.end()).unwrap_or(0)
    }

    fn span_from(&self, start: usize) -> Span {
        Span::new(start, self.last_end())
    }

    // ---------------------------------------------------------------- java

    fn java_type(&self) -> Option<Type> {
        let t = self.peek()?;
        if t.kind != TokenKind::Keyword {
            return None;
        }
        match t.text.as_str() {
            "int" => Some(Type::Int),
            "boolean" => Some(Type::Boolean),
            "String" => Some(Type::Text),
            "void" => Some(Type::Void),
            _ => None,
        }
    }

    fn java_unit(&mut self) -> PResult<CompilationUnit> {
        let mut items = Vec::new();
        while self.peek().is_some() {
            let start = self.start();
            let ty = self.java_type().ok_or_else(|| self.error("type"))?;
            self.bump();
            let name = self.expect_ident()?;
            if self.at(TokenKind::Punct, "(") {
                self.bump();
                let mut params = Vec::new();
                if !self.at(TokenKind::Punct, ")") {
                    loop {
                        let pty = match self.java_type() {
                            Some(t) if t != Type::Void => t,
                            _ => return Err(self.error("parameter type")),
                        };
                        self.bump();
                        params.push(Param { name: self.expect_ident()?, ty: Some(pty) });
                        if self.at(TokenKind::Punct, ",") {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(TokenKind::Punct, ")")?;
                let body = self.java_block()?;
                items.push(Item::Function(Function { name, params, ret: Some(ty), body, span: self.span_from(start) }));
            } else {
                if ty == Type::Void {
                    return Err(self.error("\"(\""));
                }
                let init = self.java_decl_tail()?;
                self.expect(TokenKind::Punct, ";")?;
                items.push(Item::Global(Stmt::new(StmtKind::Decl { ty, name, init }, self.span_from(start))));
            }
        }
        Ok(CompilationUnit { items })
    }

    fn java_decl_tail(&mut self) -> PResult<Option<Expr>> {
        if self.at(TokenKind::Operator, "=") {
            self.bump();
            Ok(Some(self.expr()?))
        } else {
            Ok(None)
        }
    }

    fn java_block(&mut self) -> PResult<Block> {
        self.expect(TokenKind::Punct, "{")?;
        let mut stmts = Vec::new();
        while !self.at(TokenKind::Punct, "}") {
            if self.peek().is_none() {
                return Err(self.error("\"}\""));
            }
            stmts.push(self.java_stmt()?);
        }
        self.bump();
        Ok(Block::new(stmts))
    }

    /// Loop and branch bodies: a braced block, or a single statement.
    fn java_body(&mut self) -> PResult<Block> {
        if self.at(TokenKind::Punct, "{") {
            self.java_block()
        } else {
            Ok(Block::new(vec![self.java_stmt()?]))
        }
    }

    /// Declaration or assignment without the trailing `;` (for-loop heads).
    fn java_simple(&mut self) -> PResult<Stmt> {
        let start = self.start();
        if let Some(ty) = self.java_type() {
            if ty == Type::Void {
                return Err(self.error("type"));
            }
            self.bump();
            let name = self.expect_ident()?;
            let init = self.java_decl_tail()?;
            return Ok(Stmt::new(StmtKind::Decl { ty, name, init }, self.span_from(start)));
        }
        let name = self.expect_ident()?;
        self.expect(TokenKind::Operator, "=")?;
        let value = self.expr()?;
        Ok(Stmt::new(StmtKind::Assign { name, value }, self.span_from(start)))
    }

    fn java_stmt(&mut self) -> PResult<Stmt> {
        let start = self.start();
        let t = self.peek().ok_or_else(|| self.error("statement"))?;
        let kind = match (t.kind, t.text.as_str()) {
            (TokenKind::Punct, ";") => {
                self.bump();
                StmtKind::Empty
            }
            (TokenKind::Punct, "{") => StmtKind::Block(self.java_block()?),
            (TokenKind::Keyword, "if") => {
                self.bump();
                self.expect(TokenKind::Punct, "(")?;
                let cond = self.expr()?;
                self.expect(TokenKind::Punct, ")")?;
                let then = self.java_body()?;
                let otherwise = if self.at(TokenKind::Keyword, "else") {
                    self.bump();
                    if self.at(TokenKind::Keyword, "if") {
                        Some(Block::new(vec![self.java_stmt()?]))
                    } else {
                        Some(self.java_body()?)
                    }
                } else {
                    None
                };
                StmtKind::If { cond, then, otherwise }
            }
            (TokenKind::Keyword, "for") => {
                self.bump();
                self.expect(TokenKind::Punct, "(")?;
                let init = self.java_simple()?;
                self.expect(TokenKind::Punct, ";")?;
                let cond = self.expr()?;
                self.expect(TokenKind::Punct, ";")?;
                let update = self.java_simple()?;
                if !matches!(update.kind, StmtKind::Assign { .. }) {
                    return Err(ParseError {
                        offset: update.span.offset,
                        expected: "assignment".into(),
                        found: "declaration".into(),
                    });
                }
                self.expect(TokenKind::Punct, ")")?;
                let body = self.java_body()?;
                StmtKind::For { init: Box::new(init), cond, update: Box::new(update), body }
            }
            (TokenKind::Keyword, "while") => {
                self.bump();
                self.expect(TokenKind::Punct, "(")?;
                let cond = self.expr()?;
                self.expect(TokenKind::Punct, ")")?;
                StmtKind::While { cond, body: self.java_body()? }
            }
            (TokenKind::Keyword, "switch") => {
                self.bump();
                self.expect(TokenKind::Punct, "(")?;
                let scrutinee = self.expr()?;
                self.expect(TokenKind::Punct, ")")?;
                self.expect(TokenKind::Punct, "{")?;
                let mut cases = Vec::new();
                while !self.at(TokenKind::Punct, "}") {
                    let label = if self.at(TokenKind::Keyword, "case") {
                        self.bump();
                        let negative = self.at(TokenKind::Operator, "-");
                        if negative {
                            self.bump();
                        }
                        if !self.at_kind(TokenKind::IntLiteral) {
                            return Err(self.error("integer case label"));
                        }
                        let v: i64 = self.bump().text.parse().map_err(|_| self.error("integer"))?;
                        Some(if negative { v.wrapping_neg() } else { v })
                    } else if self.at(TokenKind::Keyword, "default") {
                        self.bump();
                        None
                    } else {
                        return Err(self.error("\"case\" or \"default\""));
                    };
                    self.expect(TokenKind::Punct, ":")?;
                    let mut body = Vec::new();
                    while !(self.at(TokenKind::Keyword, "case")
                        || self.at(TokenKind::Keyword, "default")
                        || self.at(TokenKind::Punct, "}"))
                    {
                        if self.peek().is_none() {
                            return Err(self.error("\"}\""));
                        }
                        body.push(self.java_stmt()?);
                    }
                    cases.push(SwitchCase { label, body });
                }
                self.bump();
                StmtKind::Switch { scrutinee, cases }
            }
            (TokenKind::Keyword, "return") => {
                self.bump();
                let value = if self.at(TokenKind::Punct, ";") { None } else { Some(self.expr()?) };
                self.expect(TokenKind::Punct, ";")?;
                StmtKind::Return(value)
            }
            (TokenKind::Keyword, "break") => {
                self.bump();
                self.expect(TokenKind::Punct, ";")?;
                StmtKind::Break
            }
            (TokenKind::Keyword, _) if self.java_type().is_some() => {
                let s = self.java_simple()?;
                self.expect(TokenKind::Punct, ";")?;
                s.kind
            }
            (TokenKind::Identifier, "System") if self.peek_at(1).is_some_and(|t| t.is(TokenKind::Punct, ".")) => {
                self.bump();
                for part in [".", "out", ".", "println"] {
                    let kind = if part == "." { TokenKind::Punct } else { TokenKind::Identifier };
                    self.expect(kind, part)?;
                }
                self.expect(TokenKind::Punct, "(")?;
                let e = self.expr()?;
                self.expect(TokenKind::Punct, ")")?;
                self.expect(TokenKind::Punct, ";")?;
                StmtKind::Print(e)
            }
            (TokenKind::Identifier, _) => {
                let kind = if self.peek_at(1).is_some_and(|t| t.is(TokenKind::Punct, "(")) {
                    StmtKind::Expr(self.primary()?)
                } else {
                    self.java_simple()?.kind
                };
                self.expect(TokenKind::Punct, ";")?;
                kind
            }
            _ => return Err(self.error("statement")),
        };
        Ok(Stmt::new(kind, self.span_from(start)))
    }

    // ------------------------------------------------------------------ py

    fn skip_newlines(&mut self) {
        while self.at_kind(TokenKind::Newline) {
            self.bump();
        }
    }

    fn end_of_line(&mut self) -> PResult<()> {
        if self.at_kind(TokenKind::Newline) {
            self.bump();
            Ok(())
        } else {
            Err(self.error("end of line"))
        }
    }

    fn py_unit(&mut self) -> PResult<CompilationUnit> {
        let mut items = Vec::new();
        self.skip_newlines();
        while self.peek().is_some() {
            let start = self.start();
            if self.at(TokenKind::Keyword, "def") {
                self.bump();
                let name = self.expect_ident()?;
                self.expect(TokenKind::Punct, "(")?;
                let mut params = Vec::new();
                if !self.at(TokenKind::Punct, ")") {
                    loop {
                        params.push(Param { name: self.expect_ident()?, ty: None });
                        if self.at(TokenKind::Punct, ",") {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(TokenKind::Punct, ")")?;
                self.expect(TokenKind::Punct, ":")?;
                let body = self.py_suite()?;
                items.push(Item::Function(Function { name, params, ret: None, body, span: self.span_from(start) }));
            } else if self.at_kind(TokenKind::Identifier)
                && self.peek_at(1).is_some_and(|t| t.is(TokenKind::Operator, "="))
            {
                let name = self.bump().text.clone();
                self.bump();
                let value = self.expr()?;
                let span = self.span_from(start);
                self.end_of_line()?;
                items.push(Item::Global(Stmt::new(StmtKind::Assign { name, value }, span)));
            } else {
                return Err(self.error("\"def\" or global assignment"));
            }
            self.skip_newlines();
        }
        Ok(CompilationUnit { items })
    }

    fn py_suite(&mut self) -> PResult<Block> {
        self.end_of_line()?;
        if !self.at_kind(TokenKind::Indent) {
            return Err(self.error("indented block"));
        }
        self.bump();
        let mut stmts = Vec::new();
        while !self.at_kind(TokenKind::Dedent) {
            if self.peek().is_none() {
                return Err(self.error("dedent"));
            }
            stmts.push(self.py_stmt()?);
        }
        self.bump();
        Ok(Block::new(stmts))
    }

    fn py_stmt(&mut self) -> PResult<Stmt> {
        let start = self.start();
        let t = self.peek().ok_or_else(|| self.error("statement"))?;
        let (kind, compound) = match (t.kind, t.text.as_str()) {
            (TokenKind::Keyword, "if") => {
                self.bump();
                (self.py_if_tail()?, true)
            }
            (TokenKind::Keyword, "for") => {
                self.bump();
                let var = self.expect_ident()?;
                self.expect(TokenKind::Keyword, "in")?;
                self.expect(TokenKind::Identifier, "range")?;
                self.expect(TokenKind::Punct, "(")?;
                let first = self.expr()?;
                let (start_e, end) = if self.at(TokenKind::Punct, ",") {
                    self.bump();
                    (Some(first), self.expr()?)
                } else {
                    (None, first)
                };
                self.expect(TokenKind::Punct, ")")?;
                self.expect(TokenKind::Punct, ":")?;
                (StmtKind::ForRange { var, start: start_e, end, body: self.py_suite()? }, true)
            }
            (TokenKind::Keyword, "while") => {
                self.bump();
                let cond = self.expr()?;
                self.expect(TokenKind::Punct, ":")?;
                (StmtKind::While { cond, body: self.py_suite()? }, true)
            }
            (TokenKind::Keyword, "return") => {
                self.bump();
                let value = if self.at_kind(TokenKind::Newline) { None } else { Some(self.expr()?) };
                (StmtKind::Return(value), false)
            }
            (TokenKind::Keyword, "break") => {
                self.bump();
                (StmtKind::Break, false)
            }
            (TokenKind::Keyword, "pass") => {
                self.bump();
                (StmtKind::Empty, false)
            }
            (TokenKind::Identifier, "print") if self.peek_at(1).is_some_and(|t| t.is(TokenKind::Punct, "(")) => {
                self.bump();
                self.bump();
                let e = self.expr()?;
                self.expect(TokenKind::Punct, ")")?;
                (StmtKind::Print(e), false)
            }
            (TokenKind::Identifier, _) if self.peek_at(1).is_some_and(|t| t.is(TokenKind::Punct, "(")) => {
                (StmtKind::Expr(self.primary()?), false)
            }
            (TokenKind::Identifier, _) => {
                let name = self.bump().text.clone();
                self.expect(TokenKind::Operator, "=")?;
                (StmtKind::Assign { name, value: self.expr()? }, false)
            }
            _ => return Err(self.error("statement")),
        };
        let span = self.span_from(start);
        if !compound {
            self.end_of_line()?;
        }
        Ok(Stmt::new(kind, span))
    }

    /// After `if` or `elif`: condition, suite, and an optional elif/else chain.
    fn py_if_tail(&mut self) -> PResult<StmtKind> {
        let cond = self.expr()?;
        self.expect(TokenKind::Punct, ":")?;
        let then = self.py_suite()?;
        let otherwise = if self.at(TokenKind::Keyword, "elif") {
            let start = self.start();
            self.bump();
            let nested = self.py_if_tail()?;
            Some(Block::new(vec![Stmt::new(nested, self.span_from(start))]))
        } else if self.at(TokenKind::Keyword, "else") {
            self.bump();
            self.expect(TokenKind::Punct, ":")?;
            Some(self.py_suite()?)
        } else {
            None
        };
        Ok(StmtKind::If { cond, then, otherwise })
    }

    // --------------------------------------------------------- expressions

    fn expr(&mut self) -> PResult<Expr> {
        self.binary_level(0)
    }

    fn binary_op_at(&self, level: usize) -> Option<BinOp> {
        let t = self.peek()?;
        let op = match (self.lang, t.kind, t.text.as_str()) {
            (Lang::JavaLite, TokenKind::Operator, "||") | (Lang::PyLite, TokenKind::Keyword, "or") => BinOp::Or,
            (Lang::JavaLite, TokenKind::Operator, "&&") | (Lang::PyLite, TokenKind::Keyword, "and") => BinOp::And,
            (_, TokenKind::Operator, "==") => BinOp::Eq,
            (_, TokenKind::Operator, "!=") => BinOp::Ne,
            (_, TokenKind::Operator, "<") => BinOp::Lt,
            (_, TokenKind::Operator, "<=") => BinOp::Le,
            (_, TokenKind::Operator, ">") => BinOp::Gt,
            (_, TokenKind::Operator, ">=") => BinOp::Ge,
            (_, TokenKind::Operator, "+") => BinOp::Add,
            (_, TokenKind::Operator, "-") => BinOp::Sub,
            (_, TokenKind::Operator, "*") => BinOp::Mul,
            (Lang::JavaLite, TokenKind::Operator, "/") | (Lang::PyLite, TokenKind::Operator, "//") => BinOp::Div,
            (_, TokenKind::Operator, "%") => BinOp::Mod,
            _ => return None,
        };
        (binary_level(self.lang, op) == level).then_some(op)
    }

    fn binary_level(&mut self, level: usize) -> PResult<Expr> {
        if level == UNARY_LEVEL {
            return self.unary();
        }
        if self.lang == Lang::PyLite && level == PY_NOT_LEVEL {
            if self.at(TokenKind::Keyword, "not") {
                self.bump();
                let inner = self.binary_level(level)?;
                return Ok(Expr::unary(UnOp::Not, inner));
            }
            return self.binary_level(level + 1);
        }
        let mut lhs = self.binary_level(level + 1)?;
        let non_assoc = self.lang == Lang::PyLite && level == COMPARE_LEVEL;
        if non_assoc {
            if let Some(op) = self.binary_op_at(level) {
                self.bump();
                let rhs = self.binary_level(level + 1)?;
                lhs = Expr::binary(op, lhs, rhs);
                if self.binary_op_at(level).is_some() {
                    return Err(self.error("end of comparison (chained comparisons are not supported)"));
                }
            }
            return Ok(lhs);
        }
        while let Some(op) = self.binary_op_at(level) {
            self.bump();
            let rhs = self.binary_level(level + 1)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.at(TokenKind::Operator, "-") {
            self.bump();
            return Ok(Expr::unary(UnOp::Neg, self.unary()?));
        }
        if self.lang == Lang::JavaLite && self.at(TokenKind::Operator, "!") {
            self.bump();
            return Ok(Expr::unary(UnOp::Not, self.unary()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let t = self.peek().ok_or_else(|| self.error("expression"))?;
        match t.kind {
            TokenKind::IntLiteral => {
                let v = t.text.parse::<i64>().map_err(|_| self.error("64-bit integer"))?;
                self.bump();
                Ok(Expr::Int(v))
            }
            TokenKind::StringLiteral => {
                self.bump();
                Ok(Expr::Str(unescape(&t.text)))
            }
            TokenKind::Keyword if matches!(t.text.as_str(), "true" | "True") => {
                self.bump();
                Ok(Expr::Bool(true))
            }
            TokenKind::Keyword if matches!(t.text.as_str(), "false" | "False") => {
                self.bump();
                Ok(Expr::Bool(false))
            }
            TokenKind::Identifier => {
                let name = self.bump().text.clone();
                if self.at(TokenKind::Punct, "(") {
                    self.bump();
                    let mut args = Vec::new();
                    if !self.at(TokenKind::Punct, ")") {
                        loop {
                            args.push(self.expr()?);
                            if self.at(TokenKind::Punct, ",") {
                                self.bump();
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(TokenKind::Punct, ")")?;
                    Ok(Expr::Call { name, args })
                } else {
                    Ok(Expr::Ident(name))
                }
            }
            TokenKind::Punct if t.text == "(" => {
                self.bump();
                let e = self.expr()?;
                self.expect(TokenKind::Punct, ")")?;
                Ok(e)
            }
            _ => Err(self.error("expression")),
        }
    }
}

// Precedence levels, loosest first. py-lite inserts a prefix `not` level
// between `and` and the comparisons.
pub(crate) const OR_LEVEL: usize = 0;
pub(crate) const AND_LEVEL: usize = 1;
pub(crate) const PY_NOT_LEVEL: usize = 2;
pub(crate) const COMPARE_LEVEL: usize = 3;
pub(crate) const EQUALITY_LEVEL_JAVA: usize = 2;
pub(crate) const ADD_LEVEL: usize = 4;
pub(crate) const MUL_LEVEL: usize = 5;
pub(crate) const UNARY_LEVEL: usize = 6;

/// Binding level of a binary operator (higher binds tighter).
pub(crate) fn binary_level(lang: Lang, op: BinOp) -> usize {
    match op {
        BinOp::Or => OR_LEVEL,
        BinOp::And => AND_LEVEL,
        BinOp::Eq | BinOp::Ne if lang == Lang::JavaLite => EQUALITY_LEVEL_JAVA,
        BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => COMPARE_LEVEL,
        BinOp::Add | BinOp::Sub => ADD_LEVEL,
        BinOp::Mul | BinOp::Div | BinOp::Mod => MUL_LEVEL,
    }
}
