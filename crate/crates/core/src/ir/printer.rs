//! Canonical pretty-printer: 4-space indentation, one statement per line,
//! single spaces around binary operators, minimal parentheses.

use super::ast::*;
use super::parser::{binary_level, COMPARE_LEVEL, PY_NOT_LEVEL, UNARY_LEVEL};
use super::token::Lang;

const INDENT: &str = "    ";
const ATOM_LEVEL: usize = UNARY_LEVEL + 1;

pub fn print(tree: &SyntaxTree) -> String {
    let mut p = Printer { lang: tree.lang, out: String::new(), depth: 0 };
    let mut prev_was_fn = false;
    for (i, item) in tree.root.items.iter().enumerate() {
        match item {
            Item::Global(s) => {
                if prev_was_fn {
                    p.out.push('\n');
                }
                p.stmt(s);
                prev_was_fn = false;
            }
            Item::Function(f) => {
                if i > 0 {
                    p.out.push('\n');
                }
                p.function(f);
                prev_was_fn = true;
            }
        }
    }
    p.out
}

/// Render a single expression in the canonical style of `lang`.
pub fn print_expr(expr: &Expr, lang: Lang) -> String {
    let p = Printer { lang, out: String::new(), depth: 0 };
    p.expr(expr)
}

struct Printer {
    lang: Lang,
    out: String,
    depth: usize,
}

impl Printer {
    fn line(&mut self, text: &str) {
        for _ in 0..self.depth {
            self.out.push_str(INDENT);
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn function(&mut self, f: &Function) {
        let params: Vec<String> = f
            .params
            .iter()
            .map(|p| match (self.lang, p.ty) {
                (Lang::JavaLite, Some(t)) => format!("{} {}", t.java_name(), p.name),
                _ => p.name.clone(),
            })
            .collect();
        match self.lang {
            Lang::JavaLite => {
                let ret = f.ret.unwrap_or(Type::Void).java_name();
                self.line(&format!("{ret} {}({}) {{", f.name, params.join(", ")));
                self.java_block_body(&f.body);
                self.line("}");
            }
            Lang::PyLite => {
                self.line(&format!("def {}({}):", f.name, params.join(", ")));
                self.py_suite(&f.body);
            }
        }
    }

    fn java_block_body(&mut self, block: &Block) {
        self.depth += 1;
        for s in &block.stmts {
            self.stmt(s);
        }
        self.depth -= 1;
    }

    fn py_suite(&mut self, block: &Block) {
        self.depth += 1;
        if block.stmts.is_empty() {
            self.line("pass");
        }
        for s in &block.stmts {
            self.stmt(s);
        }
        self.depth -= 1;
    }

    /// `int x = e` / `x = e` without terminator.
    fn simple(&self, s: &Stmt) -> String {
        match &s.kind {
            StmtKind::Decl { ty, name, init } => match (self.lang, init) {
                (Lang::JavaLite, Some(e)) => format!("{} {name} = {}", ty.java_name(), self.expr(e)),
                (Lang::JavaLite, None) => format!("{} {name}", ty.java_name()),
                (Lang::PyLite, Some(e)) => format!("{name} = {}", self.expr(e)),
                (Lang::PyLite, None) => format!("{name} = {}", default_literal(*ty)),
            },
            StmtKind::Assign { name, value } => format!("{name} = {}", self.expr(value)),
            _ => unreachable!("simple statement expected"),
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match self.lang {
            Lang::JavaLite => self.java_stmt(s),
            Lang::PyLite => self.py_stmt(s),
        }
    }

    fn java_stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Decl { .. } | StmtKind::Assign { .. } => {
                let text = format!("{};", self.simple(s));
                self.line(&text);
            }
            StmtKind::If { cond, then, otherwise } => {
                let head = format!("if ({}) {{", self.expr(cond));
                self.line(&head);
                self.java_if_rest(then, otherwise.as_ref());
            }
            StmtKind::For { init, cond, update, body } => {
                let head = format!("for ({}; {}; {}) {{", self.simple(init), self.expr(cond), self.simple(update));
                self.line(&head);
                self.java_block_body(body);
                self.line("}");
            }
            StmtKind::ForRange { var, start, end, body } => {
                // py-lite construct lowered to the equivalent java-lite loop.
                let start = start.as_ref().map(|e| self.expr(e)).unwrap_or_else(|| "0".into());
                let head = format!("for (int {var} = {start}; {var} < {}; {var} = {var} + 1) {{", self.expr(end));
                self.line(&head);
                self.java_block_body(body);
                self.line("}");
            }
            StmtKind::While { cond, body } => {
                let head = format!("while ({}) {{", self.expr(cond));
                self.line(&head);
                self.java_block_body(body);
                self.line("}");
            }
            StmtKind::Switch { scrutinee, cases } => {
                let head = format!("switch ({}) {{", self.expr(scrutinee));
                self.line(&head);
                self.depth += 1;
                for c in cases {
                    match c.label {
                        Some(v) => self.line(&format!("case {v}:")),
                        None => self.line("default:"),
                    }
                    self.depth += 1;
                    for s in &c.body {
                        self.java_stmt(s);
                    }
                    self.depth -= 1;
                }
                self.depth -= 1;
                self.line("}");
            }
            StmtKind::Return(Some(e)) => {
                let text = format!("return {};", self.expr(e));
                self.line(&text);
            }
            StmtKind::Return(None) => self.line("return;"),
            StmtKind::Expr(e) => {
                let text = format!("{};", self.expr(e));
                self.line(&text);
            }
            StmtKind::Print(e) => {
                let text = format!("System.out.println({});", self.expr(e));
                self.line(&text);
            }
            StmtKind::Break => self.line("break;"),
            StmtKind::Empty => self.line(";"),
            StmtKind::Block(b) => {
                self.line("{");
                self.java_block_body(b);
                self.line("}");
            }
        }
    }

    fn java_if_rest(&mut self, then: &Block, otherwise: Option<&Block>) {
        self.java_block_body(then);
        match otherwise {
            None => self.line("}"),
            Some(b) => match b.stmts.as_slice() {
                [Stmt { kind: StmtKind::If { cond, then, otherwise }, .. }] => {
                    let head = format!("}} else if ({}) {{", self.expr(cond));
                    self.line(&head);
                    self.java_if_rest(then, otherwise.as_ref());
                }
                _ => {
                    self.line("} else {");
                    self.java_block_body(b);
                    self.line("}");
                }
            },
        }
    }

    fn py_stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Decl { .. } | StmtKind::Assign { .. } => {
                let text = self.simple(s);
                self.line(&text);
            }
            StmtKind::If { cond, then, otherwise } => {
                let head = format!("if {}:", self.expr(cond));
                self.line(&head);
                self.py_if_rest(then, otherwise.as_ref());
            }
            StmtKind::ForRange { var, start, end, body } => {
                let range = match start {
                    Some(s) => format!("{}, {}", self.expr(s), self.expr(end)),
                    None => self.expr(end),
                };
                self.line(&format!("for {var} in range({range}):"));
                self.py_suite(body);
            }
            StmtKind::For { init, cond, update, body } => {
                // java-lite construct lowered to init + while.
                self.py_stmt(init);
                let head = format!("while {}:", self.expr(cond));
                self.line(&head);
                let mut lowered = body.clone();
                lowered.stmts.push((**update).clone());
                self.py_suite(&lowered);
            }
            StmtKind::While { cond, body } => {
                let head = format!("while {}:", self.expr(cond));
                self.line(&head);
                self.py_suite(body);
            }
            StmtKind::Switch { .. } => {
                debug_assert!(false, "switch has no py-lite form");
                self.line("pass");
            }
            StmtKind::Return(Some(e)) => {
                let text = format!("return {}", self.expr(e));
                self.line(&text);
            }
            StmtKind::Return(None) => self.line("return"),
            StmtKind::Expr(e) => {
                let text = self.expr(e);
                self.line(&text);
            }
            StmtKind::Print(e) => {
                let text = format!("print({})", self.expr(e));
                self.line(&text);
            }
            StmtKind::Break => self.line("break"),
            StmtKind::Empty => self.line("pass"),
            StmtKind::Block(b) => {
                if b.stmts.is_empty() {
                    self.line("pass");
                }
                for s in &b.stmts {
                    self.py_stmt(s);
                }
            }
        }
    }

    fn py_if_rest(&mut self, then: &Block, otherwise: Option<&Block>) {
        self.py_suite(then);
        if let Some(b) = otherwise {
            match b.stmts.as_slice() {
                [Stmt { kind: StmtKind::If { cond, then, otherwise }, .. }] => {
                    let head = format!("elif {}:", self.expr(cond));
                    self.line(&head);
                    self.py_if_rest(then, otherwise.as_ref());
                }
                _ => {
                    self.line("else:");
                    self.py_suite(b);
                }
            }
        }
    }

    fn level(&self, e: &Expr) -> usize {
        match e {
            Expr::Binary { op, .. } => binary_level(self.lang, *op),
            Expr::Unary { op: UnOp::Not, .. } if self.lang == Lang::PyLite => PY_NOT_LEVEL,
            Expr::Unary { .. } => UNARY_LEVEL,
            Expr::Int(v) if *v < 0 => UNARY_LEVEL,
            _ => ATOM_LEVEL,
        }
    }

    fn wrapped(&self, e: &Expr, parens: bool) -> String {
        let s = self.expr(e);
        if parens {
            format!("({s})")
        } else {
            s
        }
    }

    fn expr(&self, e: &Expr) -> String {
        match e {
            Expr::Ident(n) => n.clone(),
            Expr::Int(v) => v.to_string(),
            Expr::Bool(b) => match (self.lang, b) {
                (Lang::JavaLite, true) => "true".into(),
                (Lang::JavaLite, false) => "false".into(),
                (Lang::PyLite, true) => "True".into(),
                (Lang::PyLite, false) => "False".into(),
            },
            Expr::Str(s) => quote(s),
            Expr::Unary { op, expr } => {
                let own = self.level(e);
                let inner = self.wrapped(expr, self.level(expr) < own);
                match (op, self.lang) {
                    (UnOp::Neg, _) => format!("-{inner}"),
                    (UnOp::Not, Lang::JavaLite) => format!("!{inner}"),
                    (UnOp::Not, Lang::PyLite) => format!("not {inner}"),
                }
            }
            Expr::Binary { op, lhs, rhs } => {
                let own = binary_level(self.lang, *op);
                let non_assoc = self.lang == Lang::PyLite && own == COMPARE_LEVEL;
                let ll = self.level(lhs);
                let l = self.wrapped(lhs, ll < own || (non_assoc && ll == own));
                let r = self.wrapped(rhs, self.level(rhs) <= own);
                format!("{l} {} {r}", op_text(*op, self.lang))
            }
            Expr::Call { name, args } => {
                let args: Vec<String> = args.iter().map(|a| self.expr(a)).collect();
                format!("{name}({})", args.join(", "))
            }
        }
    }
}

fn default_literal(ty: Type) -> &'static str {
    match ty {
        Type::Int => "0",
        Type::Boolean => "False",
        Type::Text => "\"\"",
        Type::Void => "None",
    }
}

pub(crate) fn op_text(op: BinOp, lang: Lang) -> &'static str {
    match (op, lang) {
        (BinOp::Add, _) => "+",
        (BinOp::Sub, _) => "-",
        (BinOp::Mul, _) => "*",
        (BinOp::Div, Lang::JavaLite) => "/",
        (BinOp::Div, Lang::PyLite) => "//",
        (BinOp::Mod, _) => "%",
        (BinOp::Eq, _) => "==",
        (BinOp::Ne, _) => "!=",
        (BinOp::Lt, _) => "<",
        (BinOp::Le, _) => "<=",
        (BinOp::Gt, _) => ">",
        (BinOp::Ge, _) => ">=",
        (BinOp::And, Lang::JavaLite) => "&&",
        (BinOp::And, Lang::PyLite) => "and",
        (BinOp::Or, Lang::JavaLite) => "||",
        (BinOp::Or, Lang::PyLite) => "or",
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
