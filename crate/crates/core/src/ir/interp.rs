//! Tree-walking interpreter used as the behavioral oracle.
//!
//! Integers are 64-bit and every arithmetic operation wraps
//! (`i64::MIN / -1 == i64::MIN`). java-lite divides and takes remainders
//! truncating toward zero; py-lite `//` and `%` floor, as in Python.
//! Every executed statement, loop test, and call consumes one unit of
//! fuel; running dry (or nesting calls deeper than `MAX_CALL_DEPTH`)
//! yields `FuelExhausted`.

use super::ast::*;
use super::token::Lang;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

pub const DEFAULT_FUEL: u64 = 100_000;
pub const MAX_CALL_DEPTH: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Text(String),
    Unit,
}

impl Value {
    /// Textual form as the language's print statement would show it.
    pub fn render(&self, lang: Lang) -> String {
        match (self, lang) {
            (Value::Int(v), _) => v.to_string(),
            (Value::Bool(true), Lang::JavaLite) => "true".into(),
            (Value::Bool(false), Lang::JavaLite) => "false".into(),
            (Value::Bool(true), Lang::PyLite) => "True".into(),
            (Value::Bool(false), Lang::PyLite) => "False".into(),
            (Value::Text(s), _) => s.clone(),
            (Value::Unit, Lang::JavaLite) => "void".into(),
            (Value::Unit, Lang::PyLite) => "None".into(),
        }
    }

    fn kind_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Bool(_) => "boolean",
            Value::Text(_) => "text",
            Value::Unit => "unit",
        }
    }

    fn truthy(&self) -> bool {
        match self {
            Value::Int(v) => *v != 0,
            Value::Bool(b) => *b,
            Value::Text(s) => !s.is_empty(),
            Value::Unit => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FaultKind {
    FuelExhausted,
    DivisionByZero,
    UnboundName,
    TypeFault,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind:?}: {message}")]
pub struct RuntimeFault {
    pub kind: FaultKind,
    pub message: String,
}

impl RuntimeFault {
    fn new(kind: FaultKind, message: impl Into<String>) -> Self {
        RuntimeFault { kind, message: message.into() }
    }
}

/// Result of a completed run: the entry function's return value and
/// every line printed along the way.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Execution {
    pub value: Value,
    pub stdout: Vec<String>,
}

/// Run the entry function (the first function of the unit) on `args`.
pub fn execute(tree: &SyntaxTree, args: &[Value], fuel: u64) -> Result<Execution, RuntimeFault> {
    let mut m = Machine::new(tree, fuel);
    for g in tree.globals() {
        m.exec_global(g)?;
    }
    let entry = tree
        .entry()
        .ok_or_else(|| RuntimeFault::new(FaultKind::UnboundName, "no entry function"))?;
    let value = m.call(entry, args.to_vec())?;
    Ok(Execution { value, stdout: m.stdout })
}

/// What an io pair compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IoMode {
    /// Printed lines followed by the return value.
    Stdout,
    /// Return value only; stdout is not observed.
    ReturnValue,
}

impl IoMode {
    /// Programs that print are judged on what they print.
    pub fn of(tree: &SyntaxTree) -> Self {
        if tree.contains_print() {
            IoMode::Stdout
        } else {
            IoMode::ReturnValue
        }
    }
}

/// Canonical observable text of one run, the form io pairs store.
pub fn observe(tree: &SyntaxTree, args: &[Value], fuel: u64, mode: IoMode) -> String {
    match execute(tree, args, fuel) {
        Ok(run) => match mode {
            IoMode::ReturnValue => run.value.render(tree.lang),
            IoMode::Stdout => {
                let mut out = String::new();
                for line in &run.stdout {
                    out.push_str(line);
                    out.push('\n');
                }
                out.push_str("=> ");
                out.push_str(&run.value.render(tree.lang));
                out
            }
        },
        Err(fault) => format!("fault: {:?}", fault.kind),
    }
}

enum Flow {
    Normal,
    Break,
    Return(Value),
}

type Scope = HashMap<String, Value>;

struct Machine<'t> {
    lang: Lang,
    functions: HashMap<&'t str, &'t Function>,
    globals: Scope,
    /// Innermost scope last. py-lite frames hold a single scope.
    frames: Vec<Vec<Scope>>,
    fuel: u64,
    stdout: Vec<String>,
}

type Exec<T> = Result<T, RuntimeFault>;

impl<'t> Machine<'t> {
    fn new(tree: &'t SyntaxTree, fuel: u64) -> Self {
        let mut functions = HashMap::new();
        for f in tree.functions() {
            functions.entry(f.name.as_str()).or_insert(f);
        }
        Machine { lang: tree.lang, functions, globals: Scope::new(), frames: Vec::new(), fuel, stdout: Vec::new() }
    }

    fn tick(&mut self) -> Exec<()> {
        if self.fuel == 0 {
            return Err(RuntimeFault::new(FaultKind::FuelExhausted, "step budget exhausted"));
        }
        self.fuel -= 1;
        Ok(())
    }

    fn exec_global(&mut self, s: &Stmt) -> Exec<()> {
        self.tick()?;
        match &s.kind {
            StmtKind::Decl { ty, name, init } => {
                let v = match init {
                    Some(e) => check_type(self.eval(e)?, *ty)?,
                    None => default_value(*ty),
                };
                self.globals.insert(name.clone(), v);
            }
            StmtKind::Assign { name, value } => {
                let v = self.eval(value)?;
                self.globals.insert(name.clone(), v);
            }
            _ => return Err(RuntimeFault::new(FaultKind::TypeFault, "unsupported global statement")),
        }
        Ok(())
    }

    fn call(&mut self, f: &'t Function, args: Vec<Value>) -> Exec<Value> {
        self.tick()?;
        if self.frames.len() >= MAX_CALL_DEPTH {
            return Err(RuntimeFault::new(FaultKind::FuelExhausted, "call depth limit"));
        }
        if args.len() != f.params.len() {
            return Err(RuntimeFault::new(
                FaultKind::TypeFault,
                format!("{} expects {} arguments, got {}", f.name, f.params.len(), args.len()),
            ));
        }
        let mut scope = Scope::new();
        for (p, v) in f.params.iter().zip(args) {
            let v = match p.ty {
                Some(ty) => check_type(v, ty)?,
                None => v,
            };
            scope.insert(p.name.clone(), v);
        }
        self.frames.push(vec![scope]);
        let flow = self.exec_stmts(&f.body.stmts);
        self.frames.pop();
        let value = match flow? {
            Flow::Return(v) => v,
            Flow::Normal => Value::Unit,
            Flow::Break => return Err(RuntimeFault::new(FaultKind::TypeFault, "break outside loop or switch")),
        };
        match f.ret {
            Some(ty) => check_type(value, ty),
            None => Ok(value),
        }
    }

    fn scopes(&mut self) -> &mut Vec<Scope> {
        self.frames.last_mut().expect("active frame")
    }

    fn with_scope<T>(&mut self, body: impl FnOnce(&mut Self) -> Exec<T>) -> Exec<T> {
        let scoped = self.lang == Lang::JavaLite;
        if scoped {
            self.scopes().push(Scope::new());
        }
        let r = body(self);
        if scoped {
            self.scopes().pop();
        }
        r
    }

    fn lookup(&self, name: &str) -> Exec<Value> {
        if let Some(frame) = self.frames.last() {
            for scope in frame.iter().rev() {
                if let Some(v) = scope.get(name) {
                    return Ok(v.clone());
                }
            }
        }
        self.globals
            .get(name)
            .cloned()
            .ok_or_else(|| RuntimeFault::new(FaultKind::UnboundName, format!("unbound name {name}")))
    }

    fn assign(&mut self, name: &str, v: Value) -> Exec<()> {
        match self.lang {
            Lang::PyLite => {
                self.scopes().last_mut().unwrap().insert(name.to_string(), v);
                Ok(())
            }
            Lang::JavaLite => {
                let slot = match self.frames.last_mut().and_then(|f| f.iter_mut().rev().find_map(|s| s.get_mut(name))) {
                    Some(slot) => slot,
                    None => self.globals.get_mut(name).ok_or_else(|| {
                        RuntimeFault::new(FaultKind::UnboundName, format!("assignment to undeclared {name}"))
                    })?,
                };
                // A declared variable keeps its declared type.
                if std::mem::discriminant(slot) != std::mem::discriminant(&v) {
                    return Err(RuntimeFault::new(
                        FaultKind::TypeFault,
                        format!("cannot assign {} to {} variable {name}", v.kind_name(), slot.kind_name()),
                    ));
                }
                *slot = v;
                Ok(())
            }
        }
    }

    fn declare(&mut self, name: &str, v: Value) {
        self.scopes().last_mut().unwrap().insert(name.to_string(), v);
    }

    fn exec_stmts(&mut self, stmts: &[Stmt]) -> Exec<Flow> {
        for s in stmts {
            match self.exec(s)? {
                Flow::Normal => {}
                other => return Ok(other),
            }
        }
        Ok(Flow::Normal)
    }

    fn exec_block(&mut self, block: &Block) -> Exec<Flow> {
        self.with_scope(|m| m.exec_stmts(&block.stmts))
    }

    fn condition(&mut self, e: &Expr) -> Exec<bool> {
        let v = self.eval(e)?;
        match (self.lang, &v) {
            (_, Value::Bool(b)) => Ok(*b),
            (Lang::PyLite, other) => Ok(other.truthy()),
            (Lang::JavaLite, other) => Err(RuntimeFault::new(
                FaultKind::TypeFault,
                format!("condition is {}, not boolean", other.kind_name()),
            )),
        }
    }

    fn exec(&mut self, s: &Stmt) -> Exec<Flow> {
        self.tick()?;
        match &s.kind {
            StmtKind::Decl { ty, name, init } => {
                let v = match init {
                    Some(e) => check_type(self.eval(e)?, *ty)?,
                    None => default_value(*ty),
                };
                match self.lang {
                    Lang::JavaLite => self.declare(name, v),
                    Lang::PyLite => self.assign(name, v)?,
                }
            }
            StmtKind::Assign { name, value } => {
                let v = self.eval(value)?;
                self.assign(name, v)?;
            }
            StmtKind::If { cond, then, otherwise } => {
                if self.condition(cond)? {
                    return self.exec_block(then);
                } else if let Some(b) = otherwise {
                    return self.exec_block(b);
                }
            }
            StmtKind::For { init, cond, update, body } => {
                return self.with_scope(|m| {
                    match m.exec(init)? {
                        Flow::Normal => {}
                        other => return Ok(other),
                    }
                    loop {
                        m.tick()?;
                        if !m.condition(cond)? {
                            return Ok(Flow::Normal);
                        }
                        match m.exec_block(body)? {
                            Flow::Normal => {}
                            Flow::Break => return Ok(Flow::Normal),
                            ret @ Flow::Return(_) => return Ok(ret),
                        }
                        m.exec(update)?;
                    }
                });
            }
            StmtKind::ForRange { var, start, end, body } => {
                let lo = match start {
                    Some(e) => self.int(e)?,
                    None => 0,
                };
                let hi = self.int(end)?;
                let mut i = lo;
                while i < hi {
                    self.tick()?;
                    self.assign(var, Value::Int(i))?;
                    match self.exec_block(body)? {
                        Flow::Normal => {}
                        Flow::Break => break,
                        ret @ Flow::Return(_) => return Ok(ret),
                    }
                    i += 1;
                }
            }
            StmtKind::While { cond, body } => loop {
                self.tick()?;
                if !self.condition(cond)? {
                    break;
                }
                match self.exec_block(body)? {
                    Flow::Normal => {}
                    Flow::Break => break,
                    ret @ Flow::Return(_) => return Ok(ret),
                }
            },
            StmtKind::Switch { scrutinee, cases } => {
                let v = self.int(scrutinee)?;
                let start = cases
                    .iter()
                    .position(|c| c.label == Some(v))
                    .or_else(|| cases.iter().position(|c| c.label.is_none()));
                if let Some(start) = start {
                    let flow = self.with_scope(|m| {
                        for c in &cases[start..] {
                            match m.exec_stmts(&c.body)? {
                                Flow::Normal => {}
                                other => return Ok(other),
                            }
                        }
                        Ok(Flow::Normal)
                    })?;
                    if let Flow::Return(v) = flow {
                        return Ok(Flow::Return(v));
                    }
                }
            }
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => self.eval(e)?,
                    None => Value::Unit,
                };
                return Ok(Flow::Return(v));
            }
            StmtKind::Expr(e) => {
                self.eval(e)?;
            }
            StmtKind::Print(e) => {
                let v = self.eval(e)?;
                self.stdout.push(v.render(self.lang));
            }
            StmtKind::Break => return Ok(Flow::Break),
            StmtKind::Empty => {}
            StmtKind::Block(b) => return self.exec_block(b),
        }
        Ok(Flow::Normal)
    }

    fn int(&mut self, e: &Expr) -> Exec<i64> {
        match self.eval(e)? {
            Value::Int(v) => Ok(v),
            other => Err(RuntimeFault::new(FaultKind::TypeFault, format!("expected int, got {}", other.kind_name()))),
        }
    }

    fn eval(&mut self, e: &Expr) -> Exec<Value> {
        match e {
            Expr::Ident(n) => self.lookup(n),
            Expr::Int(v) => Ok(Value::Int(*v)),
            Expr::Bool(b) => Ok(Value::Bool(*b)),
            Expr::Str(s) => Ok(Value::Text(s.clone())),
            Expr::Unary { op, expr } => {
                let v = self.eval(expr)?;
                match (op, v, self.lang) {
                    (UnOp::Neg, Value::Int(x), _) => Ok(Value::Int(x.wrapping_neg())),
                    (UnOp::Not, Value::Bool(b), _) => Ok(Value::Bool(!b)),
                    (UnOp::Not, other, Lang::PyLite) => Ok(Value::Bool(!other.truthy())),
                    (op, other, _) => Err(RuntimeFault::new(
                        FaultKind::TypeFault,
                        format!("{op:?} applied to {}", other.kind_name()),
                    )),
                }
            }
            Expr::Binary { op: BinOp::And, lhs, rhs } => {
                let l = self.eval(lhs)?;
                self.short_circuit(l, rhs, false)
            }
            Expr::Binary { op: BinOp::Or, lhs, rhs } => {
                let l = self.eval(lhs)?;
                self.short_circuit(l, rhs, true)
            }
            Expr::Binary { op, lhs, rhs } => {
                let l = self.eval(lhs)?;
                let r = self.eval(rhs)?;
                self.binary(*op, l, r)
            }
            Expr::Call { name, args } => {
                let f = *self
                    .functions
                    .get(name.as_str())
                    .ok_or_else(|| RuntimeFault::new(FaultKind::UnboundName, format!("unknown function {name}")))?;
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(a)?);
                }
                self.call(f, vals)
            }
        }
    }

    /// `&&`/`and` when `is_or` is false, `||`/`or` otherwise. py-lite
    /// returns the deciding operand as Python does.
    fn short_circuit(&mut self, l: Value, rhs: &Expr, is_or: bool) -> Exec<Value> {
        match self.lang {
            Lang::JavaLite => {
                let Value::Bool(lb) = l else {
                    return Err(RuntimeFault::new(FaultKind::TypeFault, "logical operator on non-boolean"));
                };
                if lb == is_or {
                    return Ok(Value::Bool(lb));
                }
                match self.eval(rhs)? {
                    b @ Value::Bool(_) => Ok(b),
                    _ => Err(RuntimeFault::new(FaultKind::TypeFault, "logical operator on non-boolean")),
                }
            }
            Lang::PyLite => {
                if l.truthy() == is_or {
                    Ok(l)
                } else {
                    self.eval(rhs)
                }
            }
        }
    }

    fn binary(&self, op: BinOp, l: Value, r: Value) -> Exec<Value> {
        use Value::*;
        let type_fault = |l: &Value, r: &Value| {
            RuntimeFault::new(FaultKind::TypeFault, format!("{op:?} on {} and {}", l.kind_name(), r.kind_name()))
        };
        match (op, &l, &r) {
            (BinOp::Add, Int(a), Int(b)) => Ok(Int(a.wrapping_add(*b))),
            (BinOp::Add, Text(a), Text(b)) => Ok(Text(format!("{a}{b}"))),
            (BinOp::Add, Text(_), _) | (BinOp::Add, _, Text(_)) if self.lang == Lang::JavaLite => {
                Ok(Text(format!("{}{}", l.render(self.lang), r.render(self.lang))))
            }
            (BinOp::Sub, Int(a), Int(b)) => Ok(Int(a.wrapping_sub(*b))),
            (BinOp::Mul, Int(a), Int(b)) => Ok(Int(a.wrapping_mul(*b))),
            (BinOp::Div | BinOp::Mod, Int(_), Int(0)) => {
                Err(RuntimeFault::new(FaultKind::DivisionByZero, "division by zero"))
            }
            (BinOp::Div, Int(a), Int(b)) => Ok(Int(match self.lang {
                Lang::JavaLite => a.wrapping_div(*b),
                Lang::PyLite => floor_div(*a, *b),
            })),
            (BinOp::Mod, Int(a), Int(b)) => Ok(Int(match self.lang {
                Lang::JavaLite => a.wrapping_rem(*b),
                Lang::PyLite => floor_mod(*a, *b),
            })),
            (BinOp::Eq | BinOp::Ne, a, b) => {
                let same_kind = std::mem::discriminant(a) == std::mem::discriminant(b);
                if !same_kind && self.lang == Lang::JavaLite {
                    return Err(type_fault(a, b));
                }
                Ok(Bool((a == b) == (op == BinOp::Eq)))
            }
            (BinOp::Lt, Int(a), Int(b)) => Ok(Bool(a < b)),
            (BinOp::Le, Int(a), Int(b)) => Ok(Bool(a <= b)),
            (BinOp::Gt, Int(a), Int(b)) => Ok(Bool(a > b)),
            (BinOp::Ge, Int(a), Int(b)) => Ok(Bool(a >= b)),
            (_, a, b) => Err(type_fault(a, b)),
        }
    }
}

fn floor_div(a: i64, b: i64) -> i64 {
    let q = a.wrapping_div(b);
    if a.wrapping_rem(b) != 0 && ((a < 0) != (b < 0)) {
        q.wrapping_sub(1)
    } else {
        q
    }
}

fn floor_mod(a: i64, b: i64) -> i64 {
    let r = a.wrapping_rem(b);
    if r != 0 && ((r < 0) != (b < 0)) {
        r.wrapping_add(b)
    } else {
        r
    }
}

/// java-lite declarations, parameters and returns are checked against
/// their declared type.
fn check_type(v: Value, ty: Type) -> Result<Value, RuntimeFault> {
    let ok = matches!(
        (&v, ty),
        (Value::Int(_), Type::Int) | (Value::Bool(_), Type::Boolean) | (Value::Text(_), Type::Text) | (Value::Unit, Type::Void)
    );
    if ok {
        Ok(v)
    } else {
        Err(RuntimeFault::new(FaultKind::TypeFault, format!("{} value where {} expected", v.kind_name(), ty.java_name())))
    }
}

fn default_value(ty: Type) -> Value {
    match ty {
        Type::Int => Value::Int(0),
        Type::Boolean => Value::Bool(false),
        Type::Text => Value::Text(String::new()),
        Type::Void => Value::Unit,
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(Lang::JavaLite))
    }
}
