//! Typed syntax tree shared by both front-ends.
//!
//! Node equality is structural: `Span` compares equal to every other span,
//! so two trees parsed from differently formatted sources are `==` when
//! they have the same shape.

use super::token::Lang;
use std::collections::BTreeSet;

/// Byte range a statement or function was parsed from. Nodes synthesized
/// by rewrites carry `Span::SYNTHETIC`.
#[derive(Debug, Clone, Copy, Default, Eq)]
pub struct Span {
    pub offset: usize,
    pub len: usize,
}

impl Span {
    pub const SYNTHETIC: Span = Span { offset: 0, len: 0 };

    pub fn new(offset: usize, end: usize) -> Self {
        Span { offset, len: end.saturating_sub(offset) }
    }
}

impl PartialEq for Span {
    fn eq(&self, _other: &Self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Type {
    Int,
    Boolean,
    Text,
    Void,
}

impl Type {
    pub fn java_name(self) -> &'static str {
        match self {
            Type::Int => "int",
            Type::Boolean => "boolean",
            Type::Text => "String",
            Type::Void => "void",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn is_comparison(self) -> bool {
        matches!(self, BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge)
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Ident(String),
    Int(i64),
    Bool(bool),
    Str(String),
    Unary { op: UnOp, expr: Box<Expr> },
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Call { name: String, args: Vec<Expr> },
}

impl Expr {
    pub fn ident(name: impl Into<String>) -> Self {
        Expr::Ident(name.into())
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    pub fn unary(op: UnOp, expr: Expr) -> Self {
        Expr::Unary { op, expr: Box::new(expr) }
    }

    pub fn contains_call(&self) -> bool {
        match self {
            Expr::Call { .. } => true,
            Expr::Unary { expr, .. } => expr.contains_call(),
            Expr::Binary { lhs, rhs, .. } => lhs.contains_call() || rhs.contains_call(),
            _ => false,
        }
    }

    pub fn mentions(&self, name: &str) -> bool {
        match self {
            Expr::Ident(n) => n == name,
            Expr::Unary { expr, .. } => expr.mentions(name),
            Expr::Binary { lhs, rhs, .. } => lhs.mentions(name) || rhs.mentions(name),
            Expr::Call { args, .. } => args.iter().any(|a| a.mentions(name)),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Block {
    pub stmts: Vec<Stmt>,
}

impl Block {
    pub fn new(stmts: Vec<Stmt>) -> Self {
        Block { stmts }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchCase {
    /// `None` is the `default` arm.
    pub label: Option<i64>,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    /// java-lite typed declaration, `int x = e;` or `int x;`.
    Decl { ty: Type, name: String, init: Option<Expr> },
    Assign { name: String, value: Expr },
    If { cond: Expr, then: Block, otherwise: Option<Block> },
    /// java-lite three-part loop. `init` is a declaration or assignment,
    /// `update` an assignment.
    For { init: Box<Stmt>, cond: Expr, update: Box<Stmt>, body: Block },
    /// py-lite `for var in range(start, end):`; `start` defaults to 0.
    ForRange { var: String, start: Option<Expr>, end: Expr, body: Block },
    While { cond: Expr, body: Block },
    Switch { scrutinee: Expr, cases: Vec<SwitchCase> },
    Return(Option<Expr>),
    Expr(Expr),
    Print(Expr),
    Break,
    /// `;` in java-lite, `pass` in py-lite.
    Empty,
    /// Nested java-lite `{ ... }` block.
    Block(Block),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

impl Stmt {
    pub fn new(kind: StmtKind, span: Span) -> Self {
        Stmt { kind, span }
    }

    pub fn synthetic(kind: StmtKind) -> Self {
        Stmt { kind, span: Span::SYNTHETIC }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    /// Always present in java-lite, absent in py-lite.
    pub ty: Option<Type>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Function {
    pub name: String,
    pub params: Vec<Param>,
    /// java-lite return type; `None` for py-lite.
    pub ret: Option<Type>,
    pub body: Block,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    /// Compilation-unit level variable (`Decl` in java-lite, `Assign` in py-lite).
    Global(Stmt),
    Function(Function),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CompilationUnit {
    pub items: Vec<Item>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntaxTree {
    pub lang: Lang,
    pub root: CompilationUnit,
}

impl SyntaxTree {
    pub fn functions(&self) -> impl Iterator<Item = &Function> {
        self.root.items.iter().filter_map(|i| match i {
            Item::Function(f) => Some(f),
            Item::Global(_) => None,
        })
    }

    pub fn functions_mut(&mut self) -> impl Iterator<Item = &mut Function> {
        self.root.items.iter_mut().filter_map(|i| match i {
            Item::Function(f) => Some(f),
            Item::Global(_) => None,
        })
    }

    /// The entry point is the first function of the unit.
    pub fn entry(&self) -> Option<&Function> {
        self.functions().next()
    }

    pub fn globals(&self) -> impl Iterator<Item = &Stmt> {
        self.root.items.iter().filter_map(|i| match i {
            Item::Global(s) => Some(s),
            Item::Function(_) => None,
        })
    }

    pub fn global_names(&self) -> BTreeSet<String> {
        self.globals()
            .filter_map(|s| match &s.kind {
                StmtKind::Decl { name, .. } | StmtKind::Assign { name, .. } => Some(name.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn function_names(&self) -> BTreeSet<String> {
        self.functions().map(|f| f.name.clone()).collect()
    }

    pub fn contains_print(&self) -> bool {
        let mut found = false;
        visit::walk_tree(self, &mut |s| found |= matches!(s.kind, StmtKind::Print(_)));
        found
    }

    /// Every identifier spelled anywhere in the tree: variables, parameters,
    /// functions, and loop variables.
    pub fn identifiers(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for item in &self.root.items {
            match item {
                Item::Global(s) => visit::stmt_identifiers(s, &mut out),
                Item::Function(f) => {
                    out.insert(f.name.clone());
                    out.extend(f.params.iter().map(|p| p.name.clone()));
                    for s in &f.body.stmts {
                        visit::stmt_identifiers(s, &mut out);
                    }
                }
            }
        }
        out
    }

    /// Smallest `k` such that `{prefix}{k}` is not spelled in the tree.
    pub fn fresh_name(&self, prefix: &str) -> String {
        let used = self.identifiers();
        (0..).map(|k| format!("{prefix}{k}")).find(|n| !used.contains(n)).unwrap()
    }
}

/// Read-only traversal helpers.
pub mod visit {
    use super::*;

    /// Pre-order over every statement, nested ones included.
    pub fn walk_tree(tree: &SyntaxTree, f: &mut dyn FnMut(&Stmt)) {
        for item in &tree.root.items {
            match item {
                Item::Global(s) => walk_stmt(s, f),
                Item::Function(func) => walk_block(&func.body, f),
            }
        }
    }

    pub fn walk_block(block: &Block, f: &mut dyn FnMut(&Stmt)) {
        for s in &block.stmts {
            walk_stmt(s, f);
        }
    }

    pub fn walk_stmt(stmt: &Stmt, f: &mut dyn FnMut(&Stmt)) {
        f(stmt);
        match &stmt.kind {
            StmtKind::If { then, otherwise, .. } => {
                walk_block(then, f);
                if let Some(b) = otherwise {
                    walk_block(b, f);
                }
            }
            StmtKind::For { init, update, body, .. } => {
                walk_stmt(init, f);
                walk_stmt(update, f);
                walk_block(body, f);
            }
            StmtKind::ForRange { body, .. } | StmtKind::While { body, .. } => walk_block(body, f),
            StmtKind::Switch { cases, .. } => {
                for c in cases {
                    for s in &c.body {
                        walk_stmt(s, f);
                    }
                }
            }
            StmtKind::Block(b) => walk_block(b, f),
            _ => {}
        }
    }

    /// Expressions directly owned by a statement (not those of nested statements).
    pub fn stmt_exprs(stmt: &Stmt) -> Vec<&Expr> {
        match &stmt.kind {
            StmtKind::Decl { init, .. } => init.iter().collect(),
            StmtKind::Assign { value, .. } => vec![value],
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } | StmtKind::For { cond, .. } => {
                vec![cond]
            }
            StmtKind::ForRange { start, end, .. } => start.iter().chain(std::iter::once(end)).collect(),
            StmtKind::Switch { scrutinee, .. } => vec![scrutinee],
            StmtKind::Return(e) => e.iter().collect(),
            StmtKind::Expr(e) | StmtKind::Print(e) => vec![e],
            StmtKind::Break | StmtKind::Empty | StmtKind::Block(_) => vec![],
        }
    }

    pub fn expr_identifiers(expr: &Expr, out: &mut BTreeSet<String>) {
        match expr {
            Expr::Ident(n) => {
                out.insert(n.clone());
            }
            Expr::Unary { expr, .. } => expr_identifiers(expr, out),
            Expr::Binary { lhs, rhs, .. } => {
                expr_identifiers(lhs, out);
                expr_identifiers(rhs, out);
            }
            Expr::Call { name, args } => {
                out.insert(name.clone());
                for a in args {
                    expr_identifiers(a, out);
                }
            }
            Expr::Int(_) | Expr::Bool(_) | Expr::Str(_) => {}
        }
    }

    pub fn stmt_identifiers(stmt: &Stmt, out: &mut BTreeSet<String>) {
        walk_stmt(stmt, &mut |s| {
            match &s.kind {
                StmtKind::Decl { name, .. } | StmtKind::Assign { name, .. } => {
                    out.insert(name.clone());
                }
                StmtKind::ForRange { var, .. } => {
                    out.insert(var.clone());
                }
                _ => {}
            }
            for e in stmt_exprs(s) {
                expr_identifiers(e, out);
            }
        });
    }

    /// Count the nodes of kind `pred` in a tree.
    pub fn count_stmts(tree: &SyntaxTree, pred: impl Fn(&StmtKind) -> bool) -> usize {
        let mut n = 0;
        walk_tree(tree, &mut |s| {
            if pred(&s.kind) {
                n += 1
            }
        });
        n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spans_do_not_affect_equality() {
        let a = Stmt::new(StmtKind::Break, Span::new(3, 9));
        let b = Stmt::synthetic(StmtKind::Break);
        assert_eq!(a, b);
        assert_ne!(a, Stmt::synthetic(StmtKind::Empty));
    }

    #[test]
    fn fresh_name_skips_used_indices() {
        let tree = SyntaxTree {
            lang: Lang::PyLite,
            root: CompilationUnit {
                items: vec![Item::Function(Function {
                    name: "fn_0".into(),
                    params: vec![Param { name: "fn_1".into(), ty: None }],
                    ret: None,
                    body: Block::default(),
                    span: Span::SYNTHETIC,
                })],
            },
        };
        assert_eq!(tree.fresh_name("fn_"), "fn_2");
        assert_eq!(tree.fresh_name("unused_"), "unused_0");
    }
}
