//! Lightweight static facts the rewrites rely on: which names are local
//! to a function, and which expressions are guaranteed to evaluate to an
//! integer (or to fault before producing anything else).

use crate::ir::ast::visit::{stmt_exprs, walk_block};
use crate::ir::ast::*;
use crate::ir::Lang;
use std::collections::{BTreeMap, BTreeSet};

/// Names a function binds in its body: java-lite declarations, py-lite
/// assignment targets and loop variables. Parameters are not included.
pub fn bound_names(func: &Function, lang: Lang) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    walk_block(&func.body, &mut |s| match &s.kind {
        StmtKind::Decl { name, .. } => {
            out.insert(name.clone());
        }
        StmtKind::Assign { name, .. } if lang == Lang::PyLite => {
            out.insert(name.clone());
        }
        StmtKind::ForRange { var, .. } => {
            out.insert(var.clone());
        }
        _ => {}
    });
    out
}

/// Local variables safe to α-rename: bound in the body, and neither a
/// parameter nor a global of the same spelling.
pub fn renamable_locals(tree: &SyntaxTree, func: &Function) -> Vec<String> {
    let globals = tree.global_names();
    bound_names(func, tree.lang)
        .into_iter()
        .filter(|n| !globals.contains(n) && !func.params.iter().any(|p| &p.name == n))
        .collect()
}

/// Every spelling of `name` as a variable inside `func`, parameters included.
pub fn variable_mentions(func: &Function, name: &str) -> usize {
    let mut n = 0;
    walk_block(&func.body, &mut |s| {
        match &s.kind {
            StmtKind::Decl { name: b, .. } | StmtKind::Assign { name: b, .. } | StmtKind::ForRange { var: b, .. }
                if b == name =>
            {
                n += 1
            }
            _ => {}
        }
        for e in stmt_exprs(s) {
            n += count_ident(e, name);
        }
    });
    n + func.params.iter().filter(|p| p.name == name).count()
}

pub fn count_ident(e: &Expr, name: &str) -> usize {
    match e {
        Expr::Ident(n) => usize::from(n == name),
        Expr::Unary { expr, .. } => count_ident(expr, name),
        Expr::Binary { lhs, rhs, .. } => count_ident(lhs, name) + count_ident(rhs, name),
        Expr::Call { args, .. } => args.iter().map(|a| count_ident(a, name)).sum(),
        _ => 0,
    }
}

/// Variables assigned (or declared, or used as loop variables) anywhere in `block`.
pub fn assigned_in(block: &Block) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    walk_block(block, &mut |s| match &s.kind {
        StmtKind::Decl { name, .. } | StmtKind::Assign { name, .. } | StmtKind::ForRange { var: name, .. } => {
            out.insert(name.clone());
        }
        _ => {}
    });
    out
}

/// Integer-typed names visible inside one function.
pub struct IntEnv {
    lang: Lang,
    names: BTreeSet<String>,
    int_functions: BTreeSet<String>,
}

impl IntEnv {
    pub fn new(tree: &SyntaxTree, func: &Function) -> Self {
        match tree.lang {
            Lang::JavaLite => Self::java(tree, func),
            Lang::PyLite => Self::py(tree, func),
        }
    }

    /// java-lite types are declared and enforced at run time; a name counts
    /// as an integer only if every declaration of it in scope says `int`.
    fn java(tree: &SyntaxTree, func: &Function) -> Self {
        let mut types: BTreeMap<String, BTreeSet<Type>> = BTreeMap::new();
        for g in tree.globals() {
            if let StmtKind::Decl { ty, name, .. } = &g.kind {
                types.entry(name.clone()).or_default().insert(*ty);
            }
        }
        for p in &func.params {
            if let Some(ty) = p.ty {
                types.entry(p.name.clone()).or_default().insert(ty);
            }
        }
        walk_block(&func.body, &mut |s| {
            if let StmtKind::Decl { ty, name, .. } = &s.kind {
                types.entry(name.clone()).or_default().insert(*ty);
            }
        });
        let names = types
            .into_iter()
            .filter(|(_, tys)| tys.len() == 1 && tys.contains(&Type::Int))
            .map(|(n, _)| n)
            .collect();
        let int_functions = tree.functions().filter(|f| f.ret == Some(Type::Int)).map(|f| f.name.clone()).collect();
        IntEnv { lang: Lang::JavaLite, names, int_functions }
    }

    /// py-lite is untyped: take the greatest set of local names whose every
    /// assignment stores an integer-certain expression. Parameters and
    /// globals are unknown and excluded.
    fn py(tree: &SyntaxTree, func: &Function) -> Self {
        let mut env = IntEnv {
            lang: Lang::PyLite,
            names: renamable_locals(tree, func).into_iter().collect(),
            int_functions: BTreeSet::new(),
        };
        let mut assignments: Vec<(String, Expr)> = Vec::new();
        walk_block(&func.body, &mut |s| {
            if let StmtKind::Assign { name, value } = &s.kind {
                assignments.push((name.clone(), value.clone()));
            }
        });
        loop {
            let demoted: Vec<String> = assignments
                .iter()
                .filter(|(n, v)| env.names.contains(n) && !env.is_int(v))
                .map(|(n, _)| n.clone())
                .collect();
            if demoted.is_empty() {
                return env;
            }
            for n in demoted {
                env.names.remove(&n);
            }
        }
    }

    /// True when evaluating `e` either yields an integer or faults.
    pub fn is_int(&self, e: &Expr) -> bool {
        match e {
            Expr::Int(_) => true,
            Expr::Ident(n) => self.names.contains(n),
            Expr::Unary { op: UnOp::Neg, .. } => true,
            Expr::Binary { op: BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod, .. } => true,
            // java-lite `+` concatenates as soon as one side is text.
            Expr::Binary { op: BinOp::Add, lhs, rhs } => match self.lang {
                Lang::JavaLite => self.is_int(lhs) && self.is_int(rhs),
                Lang::PyLite => self.is_int(lhs) || self.is_int(rhs),
            },
            Expr::Call { name, .. } => self.int_functions.contains(name),
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_source;

    #[test]
    fn py_int_inference_is_a_fixpoint() {
        let src = "def f(n):\n    a = 1\n    b = a * 2\n    c = n\n    d = \"x\"\n    e = d\n    for i in range(n):\n        a = a + i\n    return a\n";
        let tree = parse_source(src, Lang::PyLite).unwrap();
        let env = IntEnv::new(&tree, tree.entry().unwrap());
        for (name, expect) in [("a", true), ("b", true), ("c", false), ("d", false), ("e", false), ("i", true), ("n", false)] {
            assert_eq!(env.is_int(&Expr::ident(name)), expect, "{name}");
        }
    }

    #[test]
    fn java_ambiguous_declarations_are_not_int() {
        let src = "int f(int n) { { int k = 1; } { String k = \"a\"; } int m = 2; return n + m; }";
        let tree = parse_source(src, Lang::JavaLite).unwrap();
        let env = IntEnv::new(&tree, tree.entry().unwrap());
        assert!(!env.is_int(&Expr::ident("k")));
        assert!(env.is_int(&Expr::ident("m")));
        assert!(env.is_int(&Expr::binary(BinOp::Add, Expr::ident("n"), Expr::ident("m"))));
        assert!(!env.is_int(&Expr::binary(BinOp::Add, Expr::Str("a".into()), Expr::ident("m"))));
        assert!(env.is_int(&Expr::Call { name: "f".into(), args: vec![] }));
    }
}
