// SPDX-License-Identifier: Apache-2.0

//! Static checks on a parsed program that do not depend on source positions.

use std::collections::BTreeSet;

use super::ast::{BinOp, BoolExpr, Expr, Program, Stmt};
use super::{FrontendError, Pos};

/// Check well-formedness; returns warnings on success.
pub fn validate(p: &Program) -> Result<Vec<String>, FrontendError> {
    let pos = Pos::default();
    let mut warnings = Vec::new();
    let declared: BTreeSet<&str> =
        p.scalars.iter().map(String::as_str).chain(p.arrays.iter().map(|a| a.name.as_str())).collect();

    for c in &p.counters {
        if !p.scalars.contains(c) {
            return Err(FrontendError::Undeclared { pos, name: c.clone() });
        }
    }
    let mut written = BTreeSet::new();
    assigned(&p.body, &mut written);
    if let Some(c) = p.counters.iter().find(|c| written.contains(*c)) {
        return Err(FrontendError::CounterDiscipline { pos, msg: format!("loop counter `{c}` is assigned") });
    }
    let mut seen = BTreeSet::new();
    for l in p.loops() {
        if !seen.insert(l.counter.as_str()) {
            return Err(FrontendError::CounterDiscipline {
                pos,
                msg: format!("counter `{}` is shared by two loops", l.counter),
            });
        }
        let (mut sw, mut aw) = (BTreeSet::new(), BTreeSet::new());
        l.body.write_set(&mut sw, &mut aw);
        let mut tv = BTreeSet::new();
        l.trip.scalars(&mut tv);
        if let Some(v) = tv.iter().find(|v| sw.contains(*v)) {
            return Err(FrontendError::Loop { pos, msg: format!("trip count reads `{v}`, which the loop assigns") });
        }
        if l.trip.has_read() {
            return Err(FrontendError::Loop { pos, msg: "trip count must not read arrays".into() });
        }
    }
    for q in p.pre.iter().chain(&p.post) {
        for v in &q.index_vars {
            if declared.contains(v.as_str()) {
                return Err(FrontendError::Assertion {
                    pos,
                    msg: format!("bound variable `{v}` shadows a program variable"),
                });
            }
        }
        let mut arrs = BTreeSet::new();
        q.range.arrays(&mut arrs);
        if !arrs.is_empty() {
            return Err(FrontendError::Assertion { pos, msg: "the index range must not read arrays".into() });
        }
        let mut zero = false;
        q.range.for_each_expr(&mut |e| zero |= divides_by_zero(e));
        q.body.for_each_expr(&mut |e| zero |= divides_by_zero(e));
        if zero {
            warnings.push("assertion divides by the constant 0".to_string());
        }
    }
    if stmt_divides_by_zero(&p.body) {
        warnings.push("program divides by the constant 0".to_string());
    }
    Ok(warnings)
}

/// Scalars assigned by statements, excluding loop headers.
fn assigned(s: &Stmt, out: &mut BTreeSet<String>) {
    match s {
        Stmt::Assign(v, _) => {
            out.insert(v.clone());
        }
        Stmt::If(_, t, e) => {
            assigned(t, out);
            assigned(e, out);
        }
        Stmt::For(l) => assigned(&l.body, out),
        Stmt::Seq(items) => items.iter().for_each(|i| assigned(i, out)),
        Stmt::Skip | Stmt::Store(..) | Stmt::Assume(_) => {}
    }
}

fn divides_by_zero(e: &Expr) -> bool {
    match e {
        Expr::Const(_) | Expr::Var(_) => false,
        Expr::Read(_, i) | Expr::Neg(i) => divides_by_zero(i),
        Expr::Bin(op, a, b) => {
            (matches!(op, BinOp::Div | BinOp::Mod) && **b == Expr::Const(0)) || divides_by_zero(a) || divides_by_zero(b)
        }
    }
}

fn bool_divides_by_zero(b: &BoolExpr) -> bool {
    let mut z = false;
    b.for_each_expr(&mut |e| z |= divides_by_zero(e));
    z
}

fn stmt_divides_by_zero(s: &Stmt) -> bool {
    match s {
        Stmt::Skip => false,
        Stmt::Assign(_, e) => divides_by_zero(e),
        Stmt::Store(_, i, e) => divides_by_zero(i) || divides_by_zero(e),
        Stmt::Assume(b) => bool_divides_by_zero(b),
        Stmt::If(c, t, e) => bool_divides_by_zero(c) || stmt_divides_by_zero(t) || stmt_divides_by_zero(e),
        Stmt::For(l) => divides_by_zero(&l.trip) || stmt_divides_by_zero(&l.body),
        Stmt::Seq(items) => items.iter().any(stmt_divides_by_zero),
    }
}
