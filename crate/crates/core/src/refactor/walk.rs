//! Mutable traversals used by the rewrites. All of them visit in the same
//! deterministic pre-order, so a site can be addressed by its ordinal.

use crate::ir::ast::*;

/// Visit every block (function bodies first, then nested ones) until
/// `f` returns true. The callback also receives the index of the
/// enclosing function among the unit's functions.
pub fn blocks_mut(tree: &mut SyntaxTree, f: &mut dyn FnMut(usize, &mut Block) -> bool) -> bool {
    for (fi, func) in tree.functions_mut().enumerate() {
        if block_mut(fi, &mut func.body, f) {
            return true;
        }
    }
    false
}

fn block_mut(fi: usize, block: &mut Block, f: &mut dyn FnMut(usize, &mut Block) -> bool) -> bool {
    if f(fi, block) {
        return true;
    }
    for s in block.stmts.iter_mut() {
        if nested_blocks_mut(fi, s, f) {
            return true;
        }
    }
    false
}

fn nested_blocks_mut(fi: usize, s: &mut Stmt, f: &mut dyn FnMut(usize, &mut Block) -> bool) -> bool {
    match &mut s.kind {
        StmtKind::If { then, otherwise, .. } => {
            block_mut(fi, then, f) || otherwise.as_mut().is_some_and(|b| block_mut(fi, b, f))
        }
        StmtKind::For { body, .. } | StmtKind::ForRange { body, .. } | StmtKind::While { body, .. } => {
            block_mut(fi, body, f)
        }
        StmtKind::Block(b) => block_mut(fi, b, f),
        StmtKind::Switch { cases, .. } => cases
            .iter_mut()
            .any(|c| c.body.iter_mut().any(|s| nested_blocks_mut(fi, s, f))),
        _ => false,
    }
}

/// Visit every statement inside function bodies (for-loop heads included)
/// until `f` returns true.
pub fn stmts_mut(tree: &mut SyntaxTree, f: &mut dyn FnMut(usize, &mut Stmt) -> bool) -> bool {
    for (fi, func) in tree.functions_mut().enumerate() {
        if func.body.stmts.iter_mut().any(|s| stmt_mut(fi, s, f)) {
            return true;
        }
    }
    false
}

pub fn function_stmts_mut(func: &mut Function, f: &mut dyn FnMut(&mut Stmt) -> bool) -> bool {
    func.body.stmts.iter_mut().any(|s| stmt_mut(0, s, &mut |_, s| f(s)))
}

fn stmt_mut(fi: usize, s: &mut Stmt, f: &mut dyn FnMut(usize, &mut Stmt) -> bool) -> bool {
    if f(fi, s) {
        return true;
    }
    let in_block = |b: &mut Block, f: &mut dyn FnMut(usize, &mut Stmt) -> bool| {
        b.stmts.iter_mut().any(|s| stmt_mut(fi, s, f))
    };
    match &mut s.kind {
        StmtKind::If { then, otherwise, .. } => {
            in_block(then, f) || otherwise.as_mut().is_some_and(|b| in_block(b, f))
        }
        StmtKind::For { init, update, body, .. } => {
            stmt_mut(fi, init, f) || stmt_mut(fi, update, f) || in_block(body, f)
        }
        StmtKind::ForRange { body, .. } | StmtKind::While { body, .. } | StmtKind::Block(body) => in_block(body, f),
        StmtKind::Switch { cases, .. } => cases.iter_mut().any(|c| c.body.iter_mut().any(|s| stmt_mut(fi, s, f))),
        _ => false,
    }
}

/// Expressions owned directly by `s`.
pub fn own_exprs_mut(s: &mut Stmt) -> Vec<&mut Expr> {
    match &mut s.kind {
        StmtKind::Decl { init, .. } => init.iter_mut().collect(),
        StmtKind::Assign { value, .. } => vec![value],
        StmtKind::If { cond, .. } | StmtKind::While { cond, .. } | StmtKind::For { cond, .. } => vec![cond],
        StmtKind::ForRange { start, end, .. } => start.iter_mut().chain(std::iter::once(end)).collect(),
        StmtKind::Switch { scrutinee, .. } => vec![scrutinee],
        StmtKind::Return(e) => e.iter_mut().collect(),
        StmtKind::Expr(e) | StmtKind::Print(e) => vec![e],
        StmtKind::Break | StmtKind::Empty | StmtKind::Block(_) => vec![],
    }
}

/// Pre-order over an expression tree until `f` returns true.
pub fn expr_mut(e: &mut Expr, f: &mut dyn FnMut(&mut Expr) -> bool) -> bool {
    if f(e) {
        return true;
    }
    match e {
        Expr::Unary { expr, .. } => expr_mut(expr, f),
        Expr::Binary { lhs, rhs, .. } => expr_mut(lhs, f) || expr_mut(rhs, f),
        Expr::Call { args, .. } => args.iter_mut().any(|a| expr_mut(a, f)),
        _ => false,
    }
}

/// Rename a variable everywhere it is spelled inside `func`'s body:
/// reads, assignment targets, declarations and loop variables.
pub fn rename_variable(func: &mut Function, old: &str, new: &str) {
    function_stmts_mut(func, &mut |s| {
        match &mut s.kind {
            StmtKind::Decl { name, .. } | StmtKind::Assign { name, .. } | StmtKind::ForRange { var: name, .. }
                if name == old =>
            {
                *name = new.to_string();
            }
            _ => {}
        }
        for e in own_exprs_mut(s) {
            expr_mut(e, &mut |e| {
                if let Expr::Ident(n) = e {
                    if n == old {
                        *n = new.to_string();
                    }
                }
                false
            });
        }
        false
    });
}

/// Apply `f` to every call expression in the unit, globals included.
pub fn calls_mut(tree: &mut SyntaxTree, f: &mut dyn FnMut(&mut String, &mut Vec<Expr>)) {
    let mut visit = |e: &mut Expr| {
        if let Expr::Call { name, args } = e {
            f(name, args);
        }
        false
    };
    for item in tree.root.items.iter_mut() {
        match item {
            Item::Global(s) => {
                for e in own_exprs_mut(s) {
                    expr_mut(e, &mut visit);
                }
            }
            Item::Function(func) => {
                function_stmts_mut(func, &mut |s| {
                    for e in own_exprs_mut(s) {
                        expr_mut(e, &mut visit);
                    }
                    false
                });
            }
        }
    }
}
