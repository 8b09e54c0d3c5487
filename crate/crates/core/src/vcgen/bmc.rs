// SPDX-License-Identifier: Apache-2.0

//! Shallow counterexample search: loops unrolled a few times, the
//! post-condition negated at fresh indices, models replayed concretely.

use crate::exec::{eval_all, run, State};
use crate::frontend::ast::{BoolExpr, Expr, Loop, Program, RelOp, Stmt};
use crate::smt::{declare_free_ints, Expectation, Fresh, Model, Script, Term};

use super::symex::{SymState, Symex, SymexError};

/// Array sizes are capped so that models stay small enough to replay.
pub const SIZE_CAP: i64 = 64;

/// `unwind` guarded copies of each loop body, then `assume(trip <= unwind)`.
pub fn unroll(s: &Stmt, unwind: u32) -> Stmt {
    match s {
        Stmt::For(Loop { counter, trip, body, .. }) => {
            let body = unroll(body, unwind);
            let mut items = Vec::new();
            for t in 0..unwind as i64 {
                let guard = BoolExpr::rel(RelOp::Lt, Expr::Const(t), trip.clone());
                let iter = Stmt::seq(vec![Stmt::Assign(counter.clone(), Expr::Const(t)), body.clone()]);
                items.push(Stmt::if_then(guard, iter));
            }
            items.push(Stmt::Assume(BoolExpr::rel(RelOp::Le, trip.clone(), Expr::Const(unwind as i64))));
            Stmt::seq(items)
        }
        Stmt::If(c, t, e) => Stmt::If(c.clone(), Box::new(unroll(t, unwind)), Box::new(unroll(e, unwind))),
        Stmt::Seq(items) => Stmt::seq(items.iter().map(|i| unroll(i, unwind)).collect()),
        s => s.clone(),
    }
}

/// Satisfiable iff some run within the unwinding violates the post-condition
/// without leaving array bounds.
pub fn encode_bmc(p: &Program, unwind: u32) -> Result<Script, SymexError> {
    let mut s = Script::new(Expectation::SatMeansCex);
    for (n, sort) in SymState::declarations(p) {
        s.declare(n, sort);
    }
    let st0 = SymState::entry(p);
    let size = |st: &SymState, a: &str| st.expr(&p.array(a).expect("declared array").size);
    for a in &p.arrays {
        let n = st0.expr(&a.size);
        s.assert(Term::le(Term::Int(0), n.clone()));
        s.assert(Term::le(n, Term::Int(SIZE_CAP)));
    }
    let body = unroll(&p.body, unwind);
    let mut sx = Symex::new();
    let st1 = sx.exec(&body, st0.clone(), &Term::Bool(true))?;
    for a in &sx.accesses {
        let n = size(&st0, &a.array);
        let ok = Term::and([Term::le(Term::Int(0), a.index.clone()), Term::lt(a.index.clone(), n)]);
        s.assert(Term::implies(a.guard.clone(), ok));
    }
    for t in &sx.assumptions {
        s.assert(t.clone());
    }
    let mut fresh = Fresh::new();
    let mut violations = Vec::new();
    let mut points = sx.index_terms(false);
    for q in &p.post {
        let z: Vec<Term> = q.index_vars.iter().map(|_| Term::var(fresh.name("z"))).collect();
        let b = q.index_vars.iter().cloned().zip(z.iter().cloned()).collect();
        let mut reads = Vec::new();
        q.range.reads(&mut reads);
        q.body.reads(&mut reads);
        let mut parts = vec![st1.bool_with(&q.range, &b), Term::not(st1.bool_with(&q.body, &b))];
        for (a, i) in &reads {
            let it = st1.expr_with(i, &b);
            parts.push(Term::le(Term::Int(0), it.clone()));
            parts.push(Term::lt(it.clone(), size(&st1, a)));
            if !points.contains(&it) {
                points.push(it);
            }
        }
        points.extend(z);
        violations.push(Term::and(parts));
    }
    for q in &p.pre {
        if q.is_quantified() {
            for pt in &points {
                let b = q.index_vars.iter().map(|v| (v.clone(), pt.clone())).collect();
                s.assert(Term::implies(st0.bool_with(&q.range, &b), st0.bool_with(&q.body, &b)));
            }
        } else {
            s.assert(st0.bool(&q.body));
        }
    }
    s.assert(Term::or(violations));
    declare_free_ints(&mut s);
    Ok(s)
}

/// Initial state read off a model; absent names default to zero.
pub fn state_of_model(p: &Program, m: &Model) -> Option<State> {
    let mut s = State::default();
    for v in p.scalars.iter().chain(&p.counters) {
        s.scalars.insert(v.clone(), m.get(v).and_then(|x| x.as_int()).unwrap_or(0));
    }
    for a in &p.arrays {
        let n = crate::exec::eval_expr(&s, &a.size).ok()?;
        if !(0..=SIZE_CAP).contains(&n) {
            return None;
        }
        let arr = m.get(&a.name).and_then(|x| x.as_array());
        s.arrays.insert(a.name.clone(), (0..n).map(|i| arr.map_or(0, |x| x.get(i))).collect());
    }
    Some(s)
}

/// The initial and final states when the model's run really violates the
/// post-condition.
pub fn replay(p: &Program, m: &Model) -> Option<(State, State)> {
    let init = state_of_model(p, m)?;
    if !eval_all(&init, &p.pre).ok()? {
        return None;
    }
    let fin = run(p, init.clone()).ok()?;
    match eval_all(&fin, &p.post) {
        Ok(false) => Some((init, fin)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;

    #[test]
    fn unrolling_shape() {
        let p = parse("int N; counter l; int A[N]; for (l := 0; l < N; l := l + 1) { A[l] := 0; }").unwrap();
        let u = unroll(&p.body, 2);
        assert!(!u.has_loop());
        let Stmt::Seq(items) = u else { panic!() };
        assert_eq!(items.len(), 3);
    }
}
