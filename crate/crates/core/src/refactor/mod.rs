//! Semantic-preserving source rewrites.
//!
//! Every operator enumerates its candidate edit sites in a fixed traversal
//! order and the seed picks one of them uniformly. Counting and editing
//! share the same traversal, so `eligible_kinds` agrees with
//! `apply_refactor` by construction.

pub mod analysis;
mod walk;

pub use walk::blocks_mut;

use crate::ir::ast::visit::{stmt_exprs, walk_block, walk_stmt};
use crate::ir::ast::*;
use crate::ir::{print, Lang};
use analysis::{assigned_in, count_ident, renamable_locals, variable_mentions, IntEnv};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use walk::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RefactorKind {
    ApiRenaming,
    ArgumentsAdding,
    ArgumentsRenaming,
    DeadForAdding,
    DeadIfAdding,
    DeadIfElseAdding,
    DeadSwitchAdding,
    DeadWhileAdding,
    Duplication,
    FieldEnhancement,
    ForLoopEnhancement,
    IfEnhancement,
    LocalVariableAdding,
    LocalVariableRenaming,
    MethodNameRenaming,
    PlusZero,
    PrintAdding,
    ReturnOptimal,
}

impl RefactorKind {
    pub const ALL: [RefactorKind; 18] = [
        RefactorKind::ApiRenaming,
        RefactorKind::ArgumentsAdding,
        RefactorKind::ArgumentsRenaming,
        RefactorKind::DeadForAdding,
        RefactorKind::DeadIfAdding,
        RefactorKind::DeadIfElseAdding,
        RefactorKind::DeadSwitchAdding,
        RefactorKind::DeadWhileAdding,
        RefactorKind::Duplication,
        RefactorKind::FieldEnhancement,
        RefactorKind::ForLoopEnhancement,
        RefactorKind::IfEnhancement,
        RefactorKind::LocalVariableAdding,
        RefactorKind::LocalVariableRenaming,
        RefactorKind::MethodNameRenaming,
        RefactorKind::PlusZero,
        RefactorKind::PrintAdding,
        RefactorKind::ReturnOptimal,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            RefactorKind::ApiRenaming => "api-renaming",
            RefactorKind::ArgumentsAdding => "arguments-adding",
            RefactorKind::ArgumentsRenaming => "arguments-renaming",
            RefactorKind::DeadForAdding => "dead-for-adding",
            RefactorKind::DeadIfAdding => "dead-if-adding",
            RefactorKind::DeadIfElseAdding => "dead-if-else-adding",
            RefactorKind::DeadSwitchAdding => "dead-switch-adding",
            RefactorKind::DeadWhileAdding => "dead-while-adding",
            RefactorKind::Duplication => "duplication",
            RefactorKind::FieldEnhancement => "field-enhancement",
            RefactorKind::ForLoopEnhancement => "for-loop-enhancement",
            RefactorKind::IfEnhancement => "if-enhancement",
            RefactorKind::LocalVariableAdding => "local-variable-adding",
            RefactorKind::LocalVariableRenaming => "local-variable-renaming",
            RefactorKind::MethodNameRenaming => "method-name-renaming",
            RefactorKind::PlusZero => "plus-zero",
            RefactorKind::PrintAdding => "print-adding",
            RefactorKind::ReturnOptimal => "return-optimal",
        }
    }

    pub fn is_renaming(self) -> bool {
        matches!(
            self,
            RefactorKind::ApiRenaming
                | RefactorKind::MethodNameRenaming
                | RefactorKind::ArgumentsRenaming
                | RefactorKind::LocalVariableRenaming
        )
    }

    pub fn is_dead_code(self) -> bool {
        matches!(
            self,
            RefactorKind::DeadForAdding
                | RefactorKind::DeadIfAdding
                | RefactorKind::DeadIfElseAdding
                | RefactorKind::DeadSwitchAdding
                | RefactorKind::DeadWhileAdding
        )
    }

    pub fn supports(self, lang: Lang) -> bool {
        !(self == RefactorKind::DeadSwitchAdding && lang == Lang::PyLite)
    }
}

impl fmt::Display for RefactorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for RefactorKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RefactorKind::ALL
            .into_iter()
            .find(|k| k.slug() == s)
            .ok_or_else(|| format!("unknown refactoring `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RewriteStatus {
    Applied,
    NotApplicable,
    UnsupportedSyntax,
}

#[derive(Debug, Clone)]
pub struct RewriteOutcome {
    pub status: RewriteStatus,
    pub tree: SyntaxTree,
    pub note: String,
}

impl RewriteOutcome {
    pub fn applied(&self) -> bool {
        self.status == RewriteStatus::Applied
    }
}

pub fn apply_refactor(kind: RefactorKind, tree: &SyntaxTree, seed: u64) -> RewriteOutcome {
    let unchanged = |status, note: String| RewriteOutcome { status, tree: tree.clone(), note };
    if !kind.supports(tree.lang) {
        return unchanged(RewriteStatus::UnsupportedSyntax, format!("{kind} has no {} form", tree.lang));
    }
    let sites = count_sites(kind, tree);
    if sites == 0 {
        return unchanged(RewriteStatus::NotApplicable, format!("no site for {kind}"));
    }
    let pick = ChaCha8Rng::seed_from_u64(seed).random_range(0..sites);
    let mut out = tree.clone();
    let note = run(kind, &mut out, Some(pick)).unwrap_or_default();
    if print(&out) == print(tree) {
        return unchanged(RewriteStatus::NotApplicable, format!("{kind} produced no textual change"));
    }
    RewriteOutcome { status: RewriteStatus::Applied, tree: out, note }
}

pub fn eligible_kinds(tree: &SyntaxTree) -> BTreeSet<RefactorKind> {
    RefactorKind::ALL
        .into_iter()
        .filter(|k| k.supports(tree.lang) && count_sites(*k, tree) > 0)
        .collect()
}

fn count_sites(kind: RefactorKind, tree: &SyntaxTree) -> usize {
    let mut scratch = tree.clone();
    let mut cursor = Cursor::new(None);
    dispatch(kind, &mut scratch, &mut cursor);
    cursor.seen
}

fn run(kind: RefactorKind, tree: &mut SyntaxTree, target: Option<usize>) -> Option<String> {
    let mut cursor = Cursor::new(target);
    dispatch(kind, tree, &mut cursor);
    cursor.note
}

/// Tracks the ordinal of the site being visited. With no target it only counts.
struct Cursor {
    target: Option<usize>,
    seen: usize,
    note: Option<String>,
}

impl Cursor {
    fn new(target: Option<usize>) -> Self {
        Cursor { target, seen: 0, note: None }
    }

    fn hit(&mut self) -> bool {
        let here = self.seen;
        self.seen += 1;
        self.target == Some(here)
    }
}

fn dispatch(kind: RefactorKind, tree: &mut SyntaxTree, c: &mut Cursor) {
    use RefactorKind::*;
    match kind {
        ApiRenaming => rename_function(tree, c, true),
        MethodNameRenaming => rename_function(tree, c, false),
        ArgumentsAdding => add_argument(tree, c),
        ArgumentsRenaming => rename_argument(tree, c),
        LocalVariableRenaming => rename_local(tree, c),
        DeadForAdding | DeadIfAdding | DeadIfElseAdding | DeadSwitchAdding | DeadWhileAdding => {
            let stmt = dead_code(kind, tree);
            insert_at_slot(tree, c, stmt, kind.slug());
        }
        PrintAdding => {
            if !tree.contains_print() {
                let stmt = Stmt::synthetic(StmtKind::Print(Expr::Str("log".into())));
                insert_at_slot(tree, c, stmt, kind.slug());
            }
        }
        Duplication => duplicate(tree, c),
        FieldEnhancement => match tree.lang {
            Lang::JavaLite => add_field(tree, c),
            Lang::PyLite => add_local(tree, c),
        },
        LocalVariableAdding => add_local(tree, c),
        ForLoopEnhancement => match tree.lang {
            Lang::JavaLite => java_for_to_while(tree, c),
            Lang::PyLite => py_for_to_while(tree, c),
        },
        IfEnhancement => double_negate(tree, c),
        PlusZero => plus_zero(tree, c),
        ReturnOptimal => inline_return(tree, c),
    }
}

fn rename_function(tree: &mut SyntaxTree, c: &mut Cursor, entry: bool) {
    let names: Vec<String> = tree.functions().map(|f| f.name.clone()).collect();
    let fresh = tree.fresh_name("fn_");
    let candidates = if entry { names.get(..1).unwrap_or(&[]) } else { names.get(1..).unwrap_or(&[]) };
    let Some(old) = candidates.iter().find(|_| c.hit()).cloned() else { return };
    for f in tree.functions_mut().filter(|f| f.name == old) {
        f.name = fresh.clone();
    }
    calls_mut(tree, &mut |name, _| {
        if *name == old {
            *name = fresh.clone();
        }
    });
    c.note = Some(format!("renamed function {old} to {fresh}"));
}

fn add_argument(tree: &mut SyntaxTree, c: &mut Cursor) {
    let fresh = tree.fresh_name("unused_");
    let ty = (tree.lang == Lang::JavaLite).then_some(Type::Int);
    let Some(func) = tree.functions_mut().skip(1).find(|_| c.hit()) else { return };
    func.params.push(Param { name: fresh.clone(), ty });
    let target = func.name.clone();
    calls_mut(tree, &mut |name, args| {
        if *name == target {
            args.push(Expr::Int(0));
        }
    });
    c.note = Some(format!("added parameter {fresh} to {target}"));
}

fn rename_argument(tree: &mut SyntaxTree, c: &mut Cursor) {
    let fresh = tree.fresh_name("arg_");
    for func in tree.functions_mut() {
        for i in 0..func.params.len() {
            if c.hit() {
                let old = std::mem::replace(&mut func.params[i].name, fresh.clone());
                rename_variable(func, &old, &fresh);
                c.note = Some(format!("renamed parameter {old} of {} to {fresh}", func.name));
                return;
            }
        }
    }
}

fn rename_local(tree: &mut SyntaxTree, c: &mut Cursor) {
    let fresh = tree.fresh_name("var_");
    let locals: Vec<Vec<String>> = tree.functions().map(|f| renamable_locals(tree, f)).collect();
    for (func, names) in tree.functions_mut().zip(locals) {
        for old in names {
            if c.hit() {
                rename_variable(func, &old, &fresh);
                c.note = Some(format!("renamed local {old} in {} to {fresh}", func.name));
                return;
            }
        }
    }
}

fn empty_body() -> Block {
    Block::new(vec![Stmt::synthetic(StmtKind::Empty)])
}

fn dead_code(kind: RefactorKind, tree: &SyntaxTree) -> Stmt {
    let kind = match kind {
        RefactorKind::DeadIfAdding => StmtKind::If { cond: Expr::Bool(false), then: empty_body(), otherwise: None },
        RefactorKind::DeadIfElseAdding => {
            StmtKind::If { cond: Expr::Bool(true), then: empty_body(), otherwise: Some(empty_body()) }
        }
        RefactorKind::DeadWhileAdding => StmtKind::While { cond: Expr::Bool(false), body: empty_body() },
        RefactorKind::DeadSwitchAdding => StmtKind::Switch {
            scrutinee: Expr::Int(0),
            cases: vec![SwitchCase { label: None, body: vec![Stmt::synthetic(StmtKind::Empty)] }],
        },
        RefactorKind::DeadForAdding => {
            let i = tree.fresh_name("i_");
            match tree.lang {
                Lang::JavaLite => StmtKind::For {
                    init: Box::new(Stmt::synthetic(StmtKind::Decl {
                        ty: Type::Int,
                        name: i.clone(),
                        init: Some(Expr::Int(0)),
                    })),
                    cond: Expr::binary(BinOp::Lt, Expr::ident(&i), Expr::Int(0)),
                    update: Box::new(Stmt::synthetic(StmtKind::Assign {
                        name: i.clone(),
                        value: Expr::binary(BinOp::Add, Expr::ident(&i), Expr::Int(1)),
                    })),
                    body: empty_body(),
                },
                Lang::PyLite => StmtKind::ForRange { var: i, start: None, end: Expr::Int(0), body: empty_body() },
            }
        }
        other => unreachable!("{other} is not a dead-code kind"),
    };
    Stmt::synthetic(kind)
}

fn ends_flow(s: &Stmt) -> bool {
    matches!(s.kind, StmtKind::Return(_) | StmtKind::Break)
}

/// Insert `stmt` at one statement slot inside a function body. Slots right
/// after `return` or `break` are skipped.
fn insert_at_slot(tree: &mut SyntaxTree, c: &mut Cursor, stmt: Stmt, what: &str) {
    let names: Vec<String> = tree.functions().map(|f| f.name.clone()).collect();
    blocks_mut(tree, &mut |fi, block| {
        for slot in 0..=block.stmts.len() {
            if slot > 0 && ends_flow(&block.stmts[slot - 1]) {
                continue;
            }
            if c.hit() {
                block.stmts.insert(slot, stmt.clone());
                c.note = Some(format!("{what} at statement {slot} of a block in {}", names[fi]));
                return true;
            }
        }
        false
    });
}

fn duplicate(tree: &mut SyntaxTree, c: &mut Cursor) {
    blocks_mut(tree, &mut |_, block| {
        for i in 0..block.stmts.len() {
            let StmtKind::Assign { name, value } = &block.stmts[i].kind else { continue };
            if value.contains_call() || value.mentions(name) {
                continue;
            }
            if c.hit() {
                let copy = block.stmts[i].clone();
                c.note = Some(format!("duplicated assignment to {name}"));
                block.stmts.insert(i + 1, copy);
                return true;
            }
        }
        false
    });
}

fn unused_zero(tree: &SyntaxTree, name: &str) -> Stmt {
    Stmt::synthetic(match tree.lang {
        Lang::JavaLite => StmtKind::Decl { ty: Type::Int, name: name.to_string(), init: Some(Expr::Int(0)) },
        Lang::PyLite => StmtKind::Assign { name: name.to_string(), value: Expr::Int(0) },
    })
}

fn add_field(tree: &mut SyntaxTree, c: &mut Cursor) {
    if !c.hit() {
        return;
    }
    let fresh = tree.fresh_name("unused_");
    tree.root.items.insert(0, Item::Global(unused_zero(tree, &fresh)));
    c.note = Some(format!("declared field {fresh}"));
}

fn add_local(tree: &mut SyntaxTree, c: &mut Cursor) {
    let fresh = tree.fresh_name("unused_");
    let stmt = unused_zero(tree, &fresh);
    let Some(func) = tree.functions_mut().find(|_| c.hit()) else { return };
    func.body.stmts.insert(0, stmt);
    c.note = Some(format!("declared local {fresh} in {}", func.name));
}

/// `for (init; cond; update) { body }` becomes
/// `{ init; while (cond) { body update } }`. Moving the update into the loop
/// body changes its scope, so bodies whose top level declares a name the
/// update reads are skipped.
fn java_for_to_while(tree: &mut SyntaxTree, c: &mut Cursor) {
    blocks_mut(tree, &mut |_, block| {
        for i in 0..block.stmts.len() {
            let StmtKind::For { update, body, .. } = &block.stmts[i].kind else { continue };
            let mut read = BTreeSet::new();
            crate::ir::ast::visit::stmt_identifiers(update, &mut read);
            let clash = body
                .stmts
                .iter()
                .any(|s| matches!(&s.kind, StmtKind::Decl { name, .. } if read.contains(name)));
            if clash || !c.hit() {
                continue;
            }
            let span = block.stmts[i].span;
            let StmtKind::For { init, cond, update, mut body } =
                std::mem::replace(&mut block.stmts[i].kind, StmtKind::Empty)
            else {
                unreachable!()
            };
            body.stmts.push(*update);
            let looped = Stmt::synthetic(StmtKind::While { cond, body });
            block.stmts[i] = Stmt::new(StmtKind::Block(Block::new(vec![*init, looped])), span);
            c.note = Some("rewrote for loop as while".into());
            return true;
        }
        false
    });
}

/// Number of times `name` is spelled as a variable inside `s`.
fn stmt_mentions(s: &Stmt, name: &str) -> usize {
    let mut n = 0;
    walk_stmt(s, &mut |s| {
        match &s.kind {
            StmtKind::Decl { name: b, .. } | StmtKind::Assign { name: b, .. } | StmtKind::ForRange { var: b, .. }
                if b == name =>
            {
                n += 1
            }
            _ => {}
        }
        n += stmt_exprs(s).into_iter().map(|e| count_ident(e, name)).sum::<usize>();
    });
    n
}

/// `for v in range(a, b): body` becomes `v = a` then
/// `while v < b: body; v = v + 1`. The bound is re-evaluated every
/// iteration and `v` ends one step further than with `range`, so the loop
/// must own `v` outright and nothing in the body may change the bound.
fn py_for_to_while(tree: &mut SyntaxTree, c: &mut Cursor) {
    let globals = tree.global_names();
    let owned: Vec<BTreeMap<String, usize>> = tree
        .functions()
        .map(|f| {
            let mut vars = BTreeSet::new();
            walk_block(&f.body, &mut |s| {
                if let StmtKind::ForRange { var, .. } = &s.kind {
                    vars.insert(var.clone());
                }
            });
            vars.into_iter().map(|v| (v.clone(), variable_mentions(f, &v))).collect()
        })
        .collect();
    blocks_mut(tree, &mut |fi, block| {
        for i in 0..block.stmts.len() {
            let s = &block.stmts[i];
            let StmtKind::ForRange { var, start, end, body } = &s.kind else { continue };
            let mut bound = BTreeSet::new();
            crate::ir::ast::visit::expr_identifiers(end, &mut bound);
            let written = assigned_in(body);
            let eligible = !globals.contains(var)
                && owned[fi].get(var) == Some(&stmt_mentions(s, var))
                && !end.contains_call()
                && !end.mentions(var)
                && !start.as_ref().is_some_and(|e| e.mentions(var))
                && !written.contains(var)
                && bound.is_disjoint(&written);
            if !eligible || !c.hit() {
                continue;
            }
            let span = s.span;
            let StmtKind::ForRange { var, start, end, mut body } =
                std::mem::replace(&mut block.stmts[i].kind, StmtKind::Empty)
            else {
                unreachable!()
            };
            body.stmts.retain(|s| !matches!(s.kind, StmtKind::Empty));
            body.stmts.push(Stmt::synthetic(StmtKind::Assign {
                name: var.clone(),
                value: Expr::binary(BinOp::Add, Expr::ident(&var), Expr::Int(1)),
            }));
            let init = Stmt::new(StmtKind::Assign { name: var.clone(), value: start.unwrap_or(Expr::Int(0)) }, span);
            let looped = Stmt::synthetic(StmtKind::While { cond: Expr::binary(BinOp::Lt, Expr::ident(&var), end), body });
            block.stmts.splice(i..=i, [init, looped]);
            c.note = Some(format!("rewrote for loop over {var} as while"));
            return true;
        }
        false
    });
}

fn double_negate(tree: &mut SyntaxTree, c: &mut Cursor) {
    stmts_mut(tree, &mut |_, s| {
        let StmtKind::If { cond, .. } = &mut s.kind else { return false };
        if !c.hit() {
            return false;
        }
        let inner = std::mem::replace(cond, Expr::Bool(false));
        *cond = Expr::unary(UnOp::Not, Expr::unary(UnOp::Not, inner));
        c.note = Some("negated an if condition twice".into());
        true
    });
}

/// Sites are maximal integer-valued expressions: an integer operand of an
/// integer arithmetic node is not a site of its own, so `x + 1` gains a
/// single `+ 0` at its root.
fn plus_zero(tree: &mut SyntaxTree, c: &mut Cursor) {
    let envs: Vec<IntEnv> = tree.functions().map(|f| IntEnv::new(tree, f)).collect();
    stmts_mut(tree, &mut |fi, s| own_exprs_mut(s).into_iter().any(|e| add_zero(e, &envs[fi], false, c)));
}

fn add_zero(e: &mut Expr, env: &IntEnv, under_int: bool, c: &mut Cursor) -> bool {
    let is_int = env.is_int(e);
    if is_int && !under_int && c.hit() {
        let inner = std::mem::replace(e, Expr::Int(0));
        *e = Expr::binary(BinOp::Add, inner, Expr::Int(0));
        c.note = Some("added + 0 to an integer expression".into());
        return true;
    }
    match e {
        Expr::Unary { op, expr } => {
            let int_node = *op == UnOp::Neg;
            add_zero(expr, env, int_node, c)
        }
        Expr::Binary { op, lhs, rhs } => {
            let int_node = is_int && op.is_arithmetic();
            add_zero(lhs, env, int_node, c) || add_zero(rhs, env, int_node, c)
        }
        Expr::Call { args, .. } => args.iter_mut().any(|a| add_zero(a, env, false, c)),
        _ => false,
    }
}

/// `x = e; return x;` becomes `return e;` when `x` is not a global. In
/// java-lite the declared type of `x` must match the return type, since
/// both conversions fault the same way only then.
fn inline_return(tree: &mut SyntaxTree, c: &mut Cursor) {
    let lang = tree.lang;
    let globals = tree.global_names();
    let info: Vec<(Option<Type>, BTreeMap<String, BTreeSet<Type>>)> = tree
        .functions()
        .map(|f| {
            let mut types: BTreeMap<String, BTreeSet<Type>> = BTreeMap::new();
            for p in &f.params {
                if let Some(ty) = p.ty {
                    types.entry(p.name.clone()).or_default().insert(ty);
                }
            }
            walk_block(&f.body, &mut |s| {
                if let StmtKind::Decl { ty, name, .. } = &s.kind {
                    types.entry(name.clone()).or_default().insert(*ty);
                }
            });
            (f.ret, types)
        })
        .collect();
    blocks_mut(tree, &mut |fi, block| {
        for i in 1..block.stmts.len() {
            let StmtKind::Return(Some(Expr::Ident(x))) = &block.stmts[i].kind else { continue };
            if globals.contains(x) {
                continue;
            }
            let (ret, types) = &info[fi];
            let ok = match (&block.stmts[i - 1].kind, lang) {
                (StmtKind::Assign { name, .. }, Lang::PyLite) => name == x,
                (StmtKind::Assign { name, .. }, Lang::JavaLite) => {
                    name == x && types.get(x).is_some_and(|t| t.len() == 1 && t.iter().next() == ret.as_ref())
                }
                (StmtKind::Decl { ty, name, init: Some(_) }, _) => name == x && Some(*ty) == *ret,
                _ => false,
            };
            if !ok || !c.hit() {
                continue;
            }
            let name = x.clone();
            let value = match block.stmts.remove(i - 1).kind {
                StmtKind::Assign { value, .. } | StmtKind::Decl { init: Some(value), .. } => value,
                _ => unreachable!(),
            };
            block.stmts[i - 1].kind = StmtKind::Return(Some(value));
            c.note = Some(format!("returned the value of {name} directly"));
            return true;
        }
        false
    });
}
