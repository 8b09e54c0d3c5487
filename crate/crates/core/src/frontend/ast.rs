// SPDX-License-Identifier: Apache-2.0

//! Abstract syntax of the restricted loop language.
//!
//! Loops are always in the restricted form `for (l := 0; l < E; l := l + 1)`.
//! C-style counting loops are normalized by the parser, which keeps the
//! original induction variable as an ordinary scalar assigned at the top of
//! the body.

use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Const(i64),
    Var(String),
    Read(String, Box<Expr>),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Self {
        Expr::Var(name.into())
    }

    pub fn read(array: impl Into<String>, index: Expr) -> Self {
        Expr::Read(array.into(), Box::new(index))
    }

    pub fn bin(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Bin(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn add(lhs: Expr, rhs: Expr) -> Self {
        Expr::bin(BinOp::Add, lhs, rhs)
    }

    pub fn sub(lhs: Expr, rhs: Expr) -> Self {
        Expr::bin(BinOp::Sub, lhs, rhs)
    }

    pub fn mul(lhs: Expr, rhs: Expr) -> Self {
        Expr::bin(BinOp::Mul, lhs, rhs)
    }

    /// Scalar variables read by this expression (array names excluded).
    pub fn scalars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Read(_, i) | Expr::Neg(i) => i.scalars(out),
            Expr::Bin(_, a, b) => {
                a.scalars(out);
                b.scalars(out);
            }
        }
    }

    pub fn arrays(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) | Expr::Var(_) => {}
            Expr::Read(a, i) => {
                out.insert(a.clone());
                i.arrays(out);
            }
            Expr::Neg(i) => i.arrays(out),
            Expr::Bin(_, a, b) => {
                a.arrays(out);
                b.arrays(out);
            }
        }
    }

    pub fn has_read(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Var(_) => false,
            Expr::Read(..) => true,
            Expr::Neg(i) => i.has_read(),
            Expr::Bin(_, a, b) => a.has_read() || b.has_read(),
        }
    }

    /// Every `A[e]` occurring in the expression, innermost first.
    pub fn reads(&self, out: &mut Vec<(String, Expr)>) {
        match self {
            Expr::Const(_) | Expr::Var(_) => {}
            Expr::Read(a, i) => {
                i.reads(out);
                out.push((a.clone(), (**i).clone()));
            }
            Expr::Neg(i) => i.reads(out),
            Expr::Bin(_, a, b) => {
                a.reads(out);
                b.reads(out);
            }
        }
    }

    /// Capture-free substitution of scalar variables.
    pub fn subst(&self, f: &dyn Fn(&str) -> Option<Expr>) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(v) => f(v).unwrap_or_else(|| Expr::Var(v.clone())),
            Expr::Read(a, i) => Expr::Read(a.clone(), Box::new(i.subst(f))),
            Expr::Neg(i) => Expr::Neg(Box::new(i.subst(f))),
            Expr::Bin(op, a, b) => Expr::bin(*op, a.subst(f), b.subst(f)),
        }
    }

    pub fn subst_var(&self, name: &str, with: &Expr) -> Expr {
        self.subst(&|v| (v == name).then(|| with.clone()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RelOp {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl RelOp {
    pub fn symbol(self) -> &'static str {
        match self {
            RelOp::Lt => "<",
            RelOp::Le => "<=",
            RelOp::Eq => "==",
            RelOp::Ne => "!=",
            RelOp::Ge => ">=",
            RelOp::Gt => ">",
        }
    }

    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            RelOp::Lt => a < b,
            RelOp::Le => a <= b,
            RelOp::Eq => a == b,
            RelOp::Ne => a != b,
            RelOp::Ge => a >= b,
            RelOp::Gt => a > b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoolExpr {
    True,
    False,
    Rel(RelOp, Expr, Expr),
    Not(Box<BoolExpr>),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
    Implies(Box<BoolExpr>, Box<BoolExpr>),
}

impl BoolExpr {
    pub fn rel(op: RelOp, a: Expr, b: Expr) -> Self {
        BoolExpr::Rel(op, a, b)
    }

    pub fn and(a: BoolExpr, b: BoolExpr) -> Self {
        match (a, b) {
            (BoolExpr::True, b) => b,
            (a, BoolExpr::True) => a,
            (a, b) => BoolExpr::And(Box::new(a), Box::new(b)),
        }
    }

    pub fn or(a: BoolExpr, b: BoolExpr) -> Self {
        BoolExpr::Or(Box::new(a), Box::new(b))
    }

    pub fn not(a: BoolExpr) -> Self {
        BoolExpr::Not(Box::new(a))
    }

    pub fn conj(items: impl IntoIterator<Item = BoolExpr>) -> Self {
        items.into_iter().fold(BoolExpr::True, BoolExpr::and)
    }

    pub fn for_each_expr<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        match self {
            BoolExpr::True | BoolExpr::False => {}
            BoolExpr::Rel(_, a, b) => {
                f(a);
                f(b);
            }
            BoolExpr::Not(a) => a.for_each_expr(f),
            BoolExpr::And(a, b) | BoolExpr::Or(a, b) | BoolExpr::Implies(a, b) => {
                a.for_each_expr(f);
                b.for_each_expr(f);
            }
        }
    }

    pub fn scalars(&self, out: &mut BTreeSet<String>) {
        self.for_each_expr(&mut |e| e.scalars(out));
    }

    pub fn arrays(&self, out: &mut BTreeSet<String>) {
        self.for_each_expr(&mut |e| e.arrays(out));
    }

    pub fn reads(&self, out: &mut Vec<(String, Expr)>) {
        self.for_each_expr(&mut |e| e.reads(out));
    }

    pub fn map_exprs(&self, f: &dyn Fn(&Expr) -> Expr) -> BoolExpr {
        match self {
            BoolExpr::True => BoolExpr::True,
            BoolExpr::False => BoolExpr::False,
            BoolExpr::Rel(op, a, b) => BoolExpr::Rel(*op, f(a), f(b)),
            BoolExpr::Not(a) => BoolExpr::Not(Box::new(a.map_exprs(f))),
            BoolExpr::And(a, b) => BoolExpr::And(Box::new(a.map_exprs(f)), Box::new(b.map_exprs(f))),
            BoolExpr::Or(a, b) => BoolExpr::Or(Box::new(a.map_exprs(f)), Box::new(b.map_exprs(f))),
            BoolExpr::Implies(a, b) => {
                BoolExpr::Implies(Box::new(a.map_exprs(f)), Box::new(b.map_exprs(f)))
            }
        }
    }

    pub fn subst_var(&self, name: &str, with: &Expr) -> BoolExpr {
        self.map_exprs(&|e| e.subst_var(name, with))
    }
}

/// `forall I :: range ==> body`. An empty `index_vars` list denotes a plain
/// quantifier-free fact.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuantAssertion {
    pub index_vars: Vec<String>,
    pub range: BoolExpr,
    pub body: BoolExpr,
}

impl QuantAssertion {
    pub fn new(index_vars: Vec<String>, range: BoolExpr, body: BoolExpr) -> Self {
        QuantAssertion { index_vars, range, body }
    }

    pub fn fact(body: BoolExpr) -> Self {
        QuantAssertion { index_vars: Vec::new(), range: BoolExpr::True, body }
    }

    pub fn is_quantified(&self) -> bool {
        !self.index_vars.is_empty()
    }

    /// Free scalars, i.e. everything except the bound index variables.
    pub fn free_scalars(&self) -> BTreeSet<String> {
        let mut s = BTreeSet::new();
        self.range.scalars(&mut s);
        self.body.scalars(&mut s);
        for v in &self.index_vars {
            s.remove(v);
        }
        s
    }

    pub fn arrays(&self) -> BTreeSet<String> {
        let mut s = BTreeSet::new();
        self.range.arrays(&mut s);
        self.body.arrays(&mut s);
        s
    }

    /// Range and body with the bound variables replaced by `at`.
    pub fn instantiate(&self, at: &[Expr]) -> (BoolExpr, BoolExpr) {
        assert_eq!(at.len(), self.index_vars.len(), "arity mismatch");
        let f = |e: &Expr| {
            e.subst(&|v| {
                self.index_vars.iter().position(|x| x == v).map(|k| at[k].clone())
            })
        };
        (self.range.map_exprs(&f), self.body.map_exprs(&f))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Skip,
    Assign(String, Expr),
    Store(String, Expr, Expr),
    Assume(BoolExpr),
    If(BoolExpr, Box<Stmt>, Box<Stmt>),
    For(Loop),
    Seq(Vec<Stmt>),
}

impl Stmt {
    pub fn seq(items: Vec<Stmt>) -> Stmt {
        let mut flat = Vec::new();
        for s in items {
            match s {
                Stmt::Seq(inner) => flat.extend(inner),
                Stmt::Skip => {}
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => Stmt::Skip,
            1 => flat.pop().unwrap(),
            _ => Stmt::Seq(flat),
        }
    }

    pub fn if_then(cond: BoolExpr, then: Stmt) -> Stmt {
        Stmt::If(cond, Box::new(then), Box::new(Stmt::Skip))
    }

    /// Scalars and arrays written anywhere inside the statement (loop
    /// counters included).
    pub fn write_set(&self, scalars: &mut BTreeSet<String>, arrays: &mut BTreeSet<String>) {
        match self {
            Stmt::Skip | Stmt::Assume(_) => {}
            Stmt::Assign(v, _) => {
                scalars.insert(v.clone());
            }
            Stmt::Store(a, _, _) => {
                arrays.insert(a.clone());
            }
            Stmt::If(_, t, e) => {
                t.write_set(scalars, arrays);
                e.write_set(scalars, arrays);
            }
            Stmt::For(l) => {
                scalars.insert(l.counter.clone());
                l.body.write_set(scalars, arrays);
            }
            Stmt::Seq(items) => items.iter().for_each(|s| s.write_set(scalars, arrays)),
        }
    }

    pub fn loops<'a>(&'a self, out: &mut Vec<&'a Loop>) {
        match self {
            Stmt::If(_, t, e) => {
                t.loops(out);
                e.loops(out);
            }
            Stmt::For(l) => {
                out.push(l);
                l.body.loops(out);
            }
            Stmt::Seq(items) => items.iter().for_each(|s| s.loops(out)),
            _ => {}
        }
    }

    pub fn has_loop(&self) -> bool {
        let mut v = Vec::new();
        self.loops(&mut v);
        !v.is_empty()
    }
}

/// Where a normalized loop came from, for reporting tiles in the user's
/// coordinates: `var == start + step * counter` inside the body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceCounter {
    pub var: String,
    pub start: Expr,
    pub step: i64,
}

#[derive(Debug, Clone, Eq)]
pub struct Loop {
    pub counter: String,
    pub trip: Expr,
    pub body: Box<Stmt>,
    /// Diagnostic metadata only; ignored by equality.
    pub source: Option<SourceCounter>,
}

impl PartialEq for Loop {
    fn eq(&self, other: &Self) -> bool {
        self.counter == other.counter && self.trip == other.trip && self.body == other.body
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrayDecl {
    pub name: String,
    pub size: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub name: String,
    pub scalars: Vec<String>,
    pub counters: BTreeSet<String>,
    pub arrays: Vec<ArrayDecl>,
    pub body: Stmt,
    pub pre: Vec<QuantAssertion>,
    pub post: Vec<QuantAssertion>,
}

impl Program {
    pub fn is_array(&self, name: &str) -> bool {
        self.arrays.iter().any(|a| a.name == name)
    }

    pub fn array(&self, name: &str) -> Option<&ArrayDecl> {
        self.arrays.iter().find(|a| a.name == name)
    }

    /// Scalars occurring in array size expressions.
    pub fn size_params(&self) -> BTreeSet<String> {
        let mut s = BTreeSet::new();
        for a in &self.arrays {
            a.size.scalars(&mut s);
        }
        s
    }

    pub fn loops(&self) -> Vec<&Loop> {
        let mut v = Vec::new();
        self.body.loops(&mut v);
        v
    }

    /// Scalars assigned anywhere in the program body.
    pub fn written_scalars(&self) -> BTreeSet<String> {
        let (mut s, mut a) = (BTreeSet::new(), BTreeSet::new());
        self.body.write_set(&mut s, &mut a);
        s
    }

    /// Top-level `assume` statements that precede the first loop and only
    /// mention scalars that are never assigned. They hold in every reachable
    /// state.
    pub fn global_assumptions(&self) -> Vec<BoolExpr> {
        let written = self.written_scalars();
        let items: Vec<&Stmt> = match &self.body {
            Stmt::Seq(items) => items.iter().collect(),
            other => vec![other],
        };
        let mut out = Vec::new();
        for s in items {
            match s {
                Stmt::For(_) => break,
                Stmt::Assume(b) => {
                    let mut vars = BTreeSet::new();
                    b.scalars(&mut vars);
                    let mut arrs = BTreeSet::new();
                    b.arrays(&mut arrs);
                    if arrs.is_empty() && vars.is_disjoint(&written) {
                        out.push(b.clone());
                    }
                }
                _ => {}
            }
        }
        out
    }

    /// `size >= 0` for every declared array whose size expression mentions
    /// no assigned scalar.
    pub fn size_assumptions(&self) -> Vec<BoolExpr> {
        let written = self.written_scalars();
        let mut seen = BTreeSet::new();
        self.arrays
            .iter()
            .filter(|a| {
                let mut v = BTreeSet::new();
                a.size.scalars(&mut v);
                v.is_disjoint(&written) && seen.insert(a.size.clone())
            })
            .map(|a| BoolExpr::rel(RelOp::Ge, a.size.clone(), Expr::Const(0)))
            .collect()
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        super::pretty::write_expr(f, self, 0)
    }
}

impl fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        super::pretty::write_bool(f, self, 0)
    }
}

impl fmt::Display for QuantAssertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.index_vars.is_empty() {
            return write!(f, "{}", self.body);
        }
        write!(f, "forall {} :: ", self.index_vars.join(", "))?;
        if self.range == BoolExpr::True {
            write!(f, "{}", self.body)
        } else {
            super::pretty::write_bool(f, &BoolExpr::Implies(Box::new(self.range.clone()), Box::new(self.body.clone())), 0)
        }
    }
}
