// SPDX-License-Identifier: Apache-2.0

//! Formula IR over integers and integer arrays, SMT-LIB2 emission, and an
//! external solver driver.

mod emit;
pub mod eval;
pub mod sexp;
mod session;
mod solver;

use std::collections::BTreeSet;

pub use emit::{emit, Expectation, Script};
pub use session::Session;
pub use sexp::{ArrayValue, Model, Value};
pub use solver::{SolverConfig, SolverError, SolverResult, Status};

use crate::frontend::ast::{BinOp, BoolExpr, Expr, RelOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    Int,
    Bool,
    IntArray,
}

impl Sort {
    pub fn smt(self) -> &'static str {
        match self {
            Sort::Int => "Int",
            Sort::Bool => "Bool",
            Sort::IntArray => "(Array Int Int)",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Neg,
    Select,
    Store,
    Ite,
    Not,
    And,
    Or,
    Implies,
    Eq,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Op {
    pub fn symbol(self) -> &'static str {
        match self {
            Op::Add => "+",
            Op::Sub | Op::Neg => "-",
            Op::Mul => "*",
            Op::Div => "div",
            Op::Mod => "mod",
            Op::Select => "select",
            Op::Store => "store",
            Op::Ite => "ite",
            Op::Not => "not",
            Op::And => "and",
            Op::Or => "or",
            Op::Implies => "=>",
            Op::Eq => "=",
            Op::Lt => "<",
            Op::Le => "<=",
            Op::Gt => ">",
            Op::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Quant {
    Forall,
    Exists,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Int(i64),
    Bool(bool),
    Var(String),
    App(Op, Vec<Term>),
    Quant(Quant, Vec<(String, Sort)>, Box<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn app(op: Op, args: Vec<Term>) -> Term {
        Term::App(op, args)
    }

    pub fn add(a: Term, b: Term) -> Term {
        Term::App(Op::Add, vec![a, b])
    }

    pub fn sub(a: Term, b: Term) -> Term {
        Term::App(Op::Sub, vec![a, b])
    }

    pub fn mul(a: Term, b: Term) -> Term {
        Term::App(Op::Mul, vec![a, b])
    }

    pub fn select(a: Term, i: Term) -> Term {
        Term::App(Op::Select, vec![a, i])
    }

    pub fn store(a: Term, i: Term, v: Term) -> Term {
        Term::App(Op::Store, vec![a, i, v])
    }

    pub fn ite(c: Term, t: Term, e: Term) -> Term {
        if t == e {
            return t;
        }
        match c {
            Term::Bool(true) => t,
            Term::Bool(false) => e,
            c => Term::App(Op::Ite, vec![c, t, e]),
        }
    }

    pub fn eq(a: Term, b: Term) -> Term {
        Term::App(Op::Eq, vec![a, b])
    }

    pub fn lt(a: Term, b: Term) -> Term {
        Term::App(Op::Lt, vec![a, b])
    }

    pub fn le(a: Term, b: Term) -> Term {
        Term::App(Op::Le, vec![a, b])
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Term) -> Term {
        match a {
            Term::Bool(b) => Term::Bool(!b),
            Term::App(Op::Not, mut v) => v.pop().unwrap(),
            a => Term::App(Op::Not, vec![a]),
        }
    }

    /// Conjunction with `true` units dropped and nested `and`s flattened.
    pub fn and(items: impl IntoIterator<Item = Term>) -> Term {
        let mut out = Vec::new();
        for t in items {
            match t {
                Term::Bool(true) => {}
                Term::Bool(false) => return Term::Bool(false),
                Term::App(Op::And, v) => out.extend(v),
                t => out.push(t),
            }
        }
        match out.len() {
            0 => Term::Bool(true),
            1 => out.pop().unwrap(),
            _ => Term::App(Op::And, out),
        }
    }

    pub fn or(items: impl IntoIterator<Item = Term>) -> Term {
        let mut out = Vec::new();
        for t in items {
            match t {
                Term::Bool(false) => {}
                Term::Bool(true) => return Term::Bool(true),
                Term::App(Op::Or, v) => out.extend(v),
                t => out.push(t),
            }
        }
        match out.len() {
            0 => Term::Bool(false),
            1 => out.pop().unwrap(),
            _ => Term::App(Op::Or, out),
        }
    }

    pub fn implies(a: Term, b: Term) -> Term {
        match (a, b) {
            (Term::Bool(true), b) => b,
            (Term::Bool(false), _) | (_, Term::Bool(true)) => Term::Bool(true),
            (a, b) => Term::App(Op::Implies, vec![a, b]),
        }
    }

    pub fn forall(vars: Vec<(String, Sort)>, body: Term) -> Term {
        if vars.is_empty() {
            body
        } else {
            Term::Quant(Quant::Forall, vars, Box::new(body))
        }
    }

    pub fn exists(vars: Vec<(String, Sort)>, body: Term) -> Term {
        if vars.is_empty() {
            body
        } else {
            Term::Quant(Quant::Exists, vars, Box::new(body))
        }
    }

    pub fn has_quantifier(&self) -> bool {
        match self {
            Term::Quant(..) => true,
            Term::App(_, args) => args.iter().any(Term::has_quantifier),
            _ => false,
        }
    }

    /// Free variable names.
    pub fn free_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::App(_, args) => args.iter().for_each(|a| a.free_vars(out)),
            Term::Quant(_, vars, body) => {
                let mut inner = BTreeSet::new();
                body.free_vars(&mut inner);
                for (v, _) in vars {
                    inner.remove(v);
                }
                out.extend(inner);
            }
            Term::Int(_) | Term::Bool(_) => {}
        }
    }

    /// Replace free variables; binders shadow.
    pub fn subst(&self, f: &dyn Fn(&str) -> Option<Term>) -> Term {
        match self {
            Term::Var(v) => f(v).unwrap_or_else(|| self.clone()),
            Term::App(op, args) => Term::App(*op, args.iter().map(|a| a.subst(f)).collect()),
            Term::Quant(q, vars, body) => {
                let bound: Vec<&String> = vars.iter().map(|(v, _)| v).collect();
                let g = |name: &str| if bound.iter().any(|b| *b == name) { None } else { f(name) };
                Term::Quant(*q, vars.clone(), Box::new(body.subst(&g)))
            }
            _ => self.clone(),
        }
    }

    /// Divisors of `div`/`mod` applications whose variables are all free.
    pub fn divisors(&self, out: &mut Vec<Term>) {
        self.divisors_under(&BTreeSet::new(), out)
    }

    fn divisors_under(&self, bound: &BTreeSet<String>, out: &mut Vec<Term>) {
        match self {
            Term::App(op, args) => {
                if matches!(op, Op::Div | Op::Mod) {
                    let d = &args[1];
                    let mut fv = BTreeSet::new();
                    d.free_vars(&mut fv);
                    let nonzero_const = matches!(d, Term::Int(c) if *c != 0);
                    if !nonzero_const && fv.is_disjoint(bound) && !out.contains(d) {
                        out.push(d.clone());
                    }
                }
                args.iter().for_each(|a| a.divisors_under(bound, out));
            }
            Term::Quant(_, vars, body) => {
                let mut b = bound.clone();
                b.extend(vars.iter().map(|(v, _)| v.clone()));
                body.divisors_under(&b, out);
            }
            _ => {}
        }
    }
}

/// Fresh names of the form `<base>!<n>`, numbered per base.
#[derive(Debug, Default, Clone)]
pub struct Fresh {
    counters: std::collections::BTreeMap<String, usize>,
}

impl Fresh {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn name(&mut self, base: &str) -> String {
        let n = self.counters.entry(base.to_string()).or_insert(0);
        let s = format!("{base}!{n}");
        *n += 1;
        s
    }
}

/// Translate a source expression; `scalar` maps a scalar name to its current
/// term and `array` an array name to its current array term.
pub fn expr_term(e: &Expr, scalar: &dyn Fn(&str) -> Term, array: &dyn Fn(&str) -> Term) -> Term {
    match e {
        Expr::Const(c) => Term::Int(*c),
        Expr::Var(v) => scalar(v),
        Expr::Read(a, i) => Term::select(array(a), expr_term(i, scalar, array)),
        Expr::Neg(x) => Term::App(Op::Neg, vec![expr_term(x, scalar, array)]),
        Expr::Bin(op, a, b) => {
            let op = match op {
                BinOp::Add => Op::Add,
                BinOp::Sub => Op::Sub,
                BinOp::Mul => Op::Mul,
                BinOp::Div => Op::Div,
                BinOp::Mod => Op::Mod,
            };
            Term::App(op, vec![expr_term(a, scalar, array), expr_term(b, scalar, array)])
        }
    }
}

pub fn bool_term(b: &BoolExpr, scalar: &dyn Fn(&str) -> Term, array: &dyn Fn(&str) -> Term) -> Term {
    match b {
        BoolExpr::True => Term::Bool(true),
        BoolExpr::False => Term::Bool(false),
        BoolExpr::Rel(op, x, y) => {
            let (x, y) = (expr_term(x, scalar, array), expr_term(y, scalar, array));
            match op {
                RelOp::Lt => Term::App(Op::Lt, vec![x, y]),
                RelOp::Le => Term::App(Op::Le, vec![x, y]),
                RelOp::Gt => Term::App(Op::Gt, vec![x, y]),
                RelOp::Ge => Term::App(Op::Ge, vec![x, y]),
                RelOp::Eq => Term::eq(x, y),
                RelOp::Ne => Term::not(Term::eq(x, y)),
            }
        }
        BoolExpr::Not(x) => Term::not(bool_term(x, scalar, array)),
        BoolExpr::And(x, y) => Term::and([bool_term(x, scalar, array), bool_term(y, scalar, array)]),
        BoolExpr::Or(x, y) => Term::or([bool_term(x, scalar, array), bool_term(y, scalar, array)]),
        BoolExpr::Implies(x, y) => Term::implies(bool_term(x, scalar, array), bool_term(y, scalar, array)),
    }
}

/// Translation with every name mapped to the same-named constant.
pub fn plain_bool(b: &BoolExpr) -> Term {
    bool_term(b, &|v| Term::var(v), &|a| Term::var(a))
}

pub fn plain_expr(e: &Expr) -> Term {
    expr_term(e, &|v| Term::var(v), &|a| Term::var(a))
}

/// Reading of a solver answer against a task's expectation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Outcome {
    Pass,
    Fail,
    Unknown,
}

impl Outcome {
    pub fn of(status: Status, expect: Expectation) -> Outcome {
        match (status, expect) {
            (Status::Unsat, Expectation::UnsatMeansPass) => Outcome::Pass,
            (Status::Sat, Expectation::UnsatMeansPass) => Outcome::Fail,
            (Status::Unsat, Expectation::SatMeansCex) => Outcome::Pass,
            (Status::Sat, Expectation::SatMeansCex) => Outcome::Fail,
            _ => Outcome::Unknown,
        }
    }
}

/// Declare every free variable of the script's assertions as `Int`, except
/// names already declared.
pub fn declare_free_ints(s: &mut Script) {
    let mut fv = BTreeSet::new();
    for a in &s.asserts {
        a.free_vars(&mut fv);
    }
    for v in fv {
        s.declare(v, Sort::Int);
    }
}
