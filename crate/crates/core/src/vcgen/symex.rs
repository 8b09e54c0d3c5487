// SPDX-License-Identifier: Apache-2.0

//! Symbolic execution of loop-free statements into array-theory terms.
//! Branches merge with `ite`; `paths` enumerates them instead.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::frontend::ast::{BoolExpr, Expr, Program, Stmt};
use crate::smt::{bool_term, expr_term, Sort, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymexError {
    #[error("loop inside a loop-free segment")]
    Loop,
    #[error("more than {0} paths")]
    PathLimit(usize),
}

/// Current term of every program variable.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SymState {
    pub scalars: BTreeMap<String, Term>,
    pub arrays: BTreeMap<String, Term>,
}

impl SymState {
    /// Every variable bound to the same-named constant.
    pub fn entry(p: &Program) -> Self {
        let mut s = SymState::default();
        for v in p.scalars.iter().chain(&p.counters) {
            s.scalars.insert(v.clone(), Term::var(v.clone()));
        }
        for a in &p.arrays {
            s.arrays.insert(a.name.clone(), Term::var(a.name.clone()));
        }
        s
    }

    pub fn declarations(p: &Program) -> Vec<(String, Sort)> {
        let mut d: Vec<(String, Sort)> = p.arrays.iter().map(|a| (a.name.clone(), Sort::IntArray)).collect();
        d.extend(p.scalars.iter().chain(&p.counters).map(|v| (v.clone(), Sort::Int)));
        d
    }

    pub fn scalar(&self, v: &str) -> Term {
        self.scalars.get(v).cloned().unwrap_or_else(|| Term::var(v))
    }

    pub fn array(&self, a: &str) -> Term {
        self.arrays.get(a).cloned().unwrap_or_else(|| Term::var(a))
    }

    pub fn expr(&self, e: &Expr) -> Term {
        self.expr_with(e, &BTreeMap::new())
    }

    pub fn bool(&self, b: &BoolExpr) -> Term {
        self.bool_with(b, &BTreeMap::new())
    }

    /// Translation where `binds` overrides scalar names (bound indices).
    pub fn expr_with(&self, e: &Expr, binds: &BTreeMap<String, Term>) -> Term {
        expr_term(e, &|v| binds.get(v).cloned().unwrap_or_else(|| self.scalar(v)), &|a| self.array(a))
    }

    pub fn bool_with(&self, b: &BoolExpr, binds: &BTreeMap<String, Term>) -> Term {
        bool_term(b, &|v| binds.get(v).cloned().unwrap_or_else(|| self.scalar(v)), &|a| self.array(a))
    }

    fn merge(c: &Term, t: SymState, e: SymState) -> SymState {
        let join = |a: BTreeMap<String, Term>, mut b: BTreeMap<String, Term>| {
            a.into_iter()
                .map(|(k, x)| {
                    let y = b.remove(&k).unwrap_or_else(|| x.clone());
                    let v = if x == y { x } else { Term::ite(c.clone(), x, y) };
                    (k, v)
                })
                .collect()
        };
        SymState { scalars: join(t.scalars, e.scalars), arrays: join(t.arrays, e.arrays) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Access {
    pub array: String,
    pub index: Term,
    pub guard: Term,
    pub write: bool,
}

/// Side information gathered while executing.
#[derive(Debug, Clone, Default)]
pub struct Symex {
    pub accesses: Vec<Access>,
    /// `guard => cond` for every `assume` and every non-constant divisor.
    pub assumptions: Vec<Term>,
}

impl Symex {
    pub fn new() -> Self {
        Self::default()
    }

    fn note(&mut self, e: &Expr, st: &SymState, guard: &Term) {
        let mut reads = Vec::new();
        e.reads(&mut reads);
        for (a, i) in reads {
            self.access(a, st.expr(&i), guard, false);
        }
        let mut ds = Vec::new();
        st.expr(e).divisors(&mut ds);
        for d in ds {
            self.assumptions.push(Term::implies(guard.clone(), Term::not(Term::eq(d, Term::Int(0)))));
        }
    }

    fn note_bool(&mut self, b: &BoolExpr, st: &SymState, guard: &Term) {
        b.for_each_expr(&mut |e| self.note(e, st, guard));
    }

    fn access(&mut self, array: String, index: Term, guard: &Term, write: bool) {
        let a = Access { array, index, guard: guard.clone(), write };
        if !self.accesses.contains(&a) {
            self.accesses.push(a);
        }
    }

    pub fn exec(&mut self, s: &Stmt, st: SymState, guard: &Term) -> Result<SymState, SymexError> {
        let mut st = st;
        match s {
            Stmt::Skip => {}
            Stmt::Assign(v, e) => {
                self.note(e, &st, guard);
                let t = st.expr(e);
                st.scalars.insert(v.clone(), t);
            }
            Stmt::Store(a, i, e) => {
                self.note(i, &st, guard);
                self.note(e, &st, guard);
                let (it, et) = (st.expr(i), st.expr(e));
                self.access(a.clone(), it.clone(), guard, true);
                let arr = Term::store(st.array(a), it, et);
                st.arrays.insert(a.clone(), arr);
            }
            Stmt::Assume(b) => {
                self.note_bool(b, &st, guard);
                self.assumptions.push(Term::implies(guard.clone(), st.bool(b)));
            }
            Stmt::If(c, t, e) => {
                self.note_bool(c, &st, guard);
                let ct = st.bool(c);
                let gt = Term::and([guard.clone(), ct.clone()]);
                let ge = Term::and([guard.clone(), Term::not(ct.clone())]);
                let a = self.exec(t, st.clone(), &gt)?;
                let b = self.exec(e, st, &ge)?;
                st = SymState::merge(&ct, a, b);
            }
            Stmt::Seq(items) => {
                for i in items {
                    st = self.exec(i, st, guard)?;
                }
            }
            Stmt::For(_) => return Err(SymexError::Loop),
        }
        Ok(st)
    }

    /// Index terms of all accesses, deduplicated, in first-seen order.
    pub fn index_terms(&self, reads_only: bool) -> Vec<Term> {
        let mut out: Vec<Term> = Vec::new();
        for a in &self.accesses {
            if (!reads_only || !a.write) && !out.contains(&a.index) {
                out.push(a.index.clone());
            }
        }
        out
    }
}

/// One path through a loop-free statement.
#[derive(Debug, Clone)]
pub struct Path {
    /// Branch conditions and assumptions along the path.
    pub pc: Vec<Term>,
    pub state: SymState,
    /// `(array, index)` for every store on the path.
    pub stores: Vec<(String, Term)>,
}

/// All paths of `s`, failing beyond `limit`.
pub fn paths(s: &Stmt, st: SymState, limit: usize) -> Result<Vec<Path>, SymexError> {
    fn go(s: &Stmt, ps: Vec<Path>, limit: usize) -> Result<Vec<Path>, SymexError> {
        let mut out = Vec::new();
        match s {
            Stmt::Seq(items) => {
                let mut ps = ps;
                for i in items {
                    ps = go(i, ps, limit)?;
                }
                return Ok(ps);
            }
            Stmt::For(_) => return Err(SymexError::Loop),
            Stmt::If(c, t, e) => {
                for p in ps {
                    let ct = p.state.bool(c);
                    let mut a = p.clone();
                    a.pc.push(ct.clone());
                    let mut b = p;
                    b.pc.push(Term::not(ct));
                    out.extend(go(t, vec![a], limit)?);
                    out.extend(go(e, vec![b], limit)?);
                    if out.len() > limit {
                        return Err(SymexError::PathLimit(limit));
                    }
                }
            }
            _ => {
                for mut p in ps {
                    match s {
                        Stmt::Assign(v, e) => {
                            let t = p.state.expr(e);
                            p.state.scalars.insert(v.clone(), t);
                        }
                        Stmt::Store(a, i, e) => {
                            let (it, et) = (p.state.expr(i), p.state.expr(e));
                            p.stores.push((a.clone(), it.clone()));
                            let arr = Term::store(p.state.array(a), it, et);
                            p.state.arrays.insert(a.clone(), arr);
                        }
                        Stmt::Assume(b) => {
                            let t = p.state.bool(b);
                            p.pc.push(t);
                        }
                        _ => {}
                    }
                    out.push(p);
                }
            }
        }
        Ok(out)
    }
    go(s, vec![Path { pc: Vec::new(), state: st, stores: Vec::new() }], limit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;

    #[test]
    fn branches_merge_and_paths_split() {
        let p = parse(
            "int x, y; int A[4];
             if (x > 0) { A[0] := 1; y := 2; } else { y := 3; }
             A[y] := x;",
        )
        .unwrap();
        let mut sx = Symex::new();
        let st = sx.exec(&p.body, SymState::entry(&p), &Term::Bool(true)).unwrap();
        assert!(matches!(st.scalar("y"), Term::App(..)));
        assert_eq!(sx.accesses.iter().filter(|a| a.write).count(), 2);
        let ps = paths(&p.body, SymState::entry(&p), 256).unwrap();
        assert_eq!(ps.len(), 2);
        assert_eq!(ps[0].stores.len(), 2);
        assert_eq!(ps[1].stores.len(), 1);
        assert_eq!(paths(&p.body, SymState::entry(&p), 1).unwrap_err(), SymexError::PathLimit(1));
    }
}
