// SPDX-License-Identifier: Apache-2.0

//! Rewriting of C-style loops into the restricted counter form.

use super::ast::{BoolExpr, Expr, Loop, RelOp, SourceCounter, Stmt};
use crate::affine::simplify;

/// Model a general loop `for (var := init; cond; step) body` that is known to
/// iterate `trip` times by a restricted loop over a fresh counter:
///
/// `for (l := 0; l < trip; l := l + 1) { if (l == 0) { var := init }; if (cond) { body; step } }`
pub fn desugar_general_loop(
    counter: &str,
    var: &str,
    init: Expr,
    cond: BoolExpr,
    step: Stmt,
    trip: Expr,
    body: Stmt,
) -> Stmt {
    let first = BoolExpr::rel(RelOp::Eq, Expr::var(counter), Expr::Const(0));
    let inner = Stmt::seq(vec![
        Stmt::if_then(first, Stmt::Assign(var.to_string(), init)),
        Stmt::if_then(cond, Stmt::seq(vec![body, step])),
    ]);
    Stmt::For(Loop { counter: counter.to_string(), trip, body: Box::new(inner), source: None })
}

/// Direction and bound of a counting loop `for (v = start; v REL bound; v±±)`.
#[derive(Debug, Clone)]
pub struct CountingLoop {
    pub var: String,
    pub start: Expr,
    pub step: i64,
    pub rel: RelOp,
    pub bound: Expr,
}

impl CountingLoop {
    /// Number of iterations as an expression over loop-invariant values, or
    /// `None` when the relation does not match the direction.
    pub fn trip_count(&self) -> Option<Expr> {
        let e = match (self.step, self.rel) {
            (1, RelOp::Lt) => Expr::sub(self.bound.clone(), self.start.clone()),
            (1, RelOp::Le) => Expr::add(Expr::sub(self.bound.clone(), self.start.clone()), Expr::Const(1)),
            (-1, RelOp::Gt) => Expr::sub(self.start.clone(), self.bound.clone()),
            (-1, RelOp::Ge) => Expr::add(Expr::sub(self.start.clone(), self.bound.clone()), Expr::Const(1)),
            _ => return None,
        };
        Some(simplify(&e))
    }

    /// `var := start ± counter`, the body prefix of the normalized loop.
    pub fn prefix(&self, counter: &str) -> Stmt {
        let l = Expr::var(counter);
        let e = if self.step > 0 { Expr::add(self.start.clone(), l) } else { Expr::sub(self.start.clone(), l) };
        Stmt::Assign(self.var.clone(), simplify(&e))
    }

    /// Value the induction variable holds after the original loop exits.
    pub fn exit_assignment(&self, trip: &Expr) -> Stmt {
        let moved = if self.step > 0 {
            Expr::add(self.start.clone(), trip.clone())
        } else {
            Expr::sub(self.start.clone(), trip.clone())
        };
        Stmt::If(
            BoolExpr::rel(RelOp::Gt, trip.clone(), Expr::Const(0)),
            Box::new(Stmt::Assign(self.var.clone(), simplify(&moved))),
            Box::new(Stmt::Assign(self.var.clone(), self.start.clone())),
        )
    }

    /// The restricted loop plus the exit assignment.
    pub fn normalize(&self, counter: &str, body: Stmt) -> Option<(Loop, Stmt)> {
        let trip = self.trip_count()?;
        let lp = Loop {
            counter: counter.to_string(),
            trip: trip.clone(),
            body: Box::new(Stmt::seq(vec![self.prefix(counter), body])),
            source: Some(SourceCounter { var: self.var.clone(), start: self.start.clone(), step: self.step }),
        };
        let exit = self.exit_assignment(&trip);
        Some((lp, exit))
    }
}
