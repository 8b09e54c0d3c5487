// SPDX-License-Identifier: Apache-2.0

//! Linear normal form for integer expressions.
//!
//! Non-linear subterms (products of variables, `/`, `%`, array reads) are kept
//! as opaque atoms, so every expression has a normal form; it is *affine in*
//! a variable when that variable only occurs as a bare atom.

use std::collections::BTreeMap;

use crate::frontend::ast::{BinOp, Expr};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Affine {
    pub terms: BTreeMap<Expr, i64>,
    pub constant: i64,
}

impl Affine {
    pub fn constant(c: i64) -> Self {
        Affine { terms: BTreeMap::new(), constant: c }
    }

    pub fn atom(e: Expr) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(e, 1);
        Affine { terms, constant: 0 }
    }

    pub fn from_expr(e: &Expr) -> Affine {
        match e {
            Expr::Const(c) => Affine::constant(*c),
            Expr::Var(_) => Affine::atom(e.clone()),
            Expr::Read(a, i) => Affine::atom(Expr::Read(a.clone(), Box::new(Affine::from_expr(i).to_expr()))),
            Expr::Neg(i) => Affine::from_expr(i).scale(-1),
            Expr::Bin(BinOp::Add, a, b) => Affine::from_expr(a).plus(&Affine::from_expr(b)),
            Expr::Bin(BinOp::Sub, a, b) => Affine::from_expr(a).plus(&Affine::from_expr(b).scale(-1)),
            Expr::Bin(BinOp::Mul, a, b) => {
                let (x, y) = (Affine::from_expr(a), Affine::from_expr(b));
                if let Some(c) = x.as_constant() {
                    y.scale(c)
                } else if let Some(c) = y.as_constant() {
                    x.scale(c)
                } else {
                    Affine::atom(Expr::mul(x.to_expr(), y.to_expr()))
                }
            }
            Expr::Bin(op @ (BinOp::Div | BinOp::Mod), a, b) => {
                let (x, y) = (Affine::from_expr(a), Affine::from_expr(b));
                match (x.as_constant(), y.as_constant()) {
                    (Some(p), Some(q)) if q != 0 => Affine::constant(if *op == BinOp::Div {
                        p.div_euclid(q)
                    } else {
                        p.rem_euclid(q)
                    }),
                    _ => Affine::atom(Expr::bin(*op, x.to_expr(), y.to_expr())),
                }
            }
        }
    }

    pub fn as_constant(&self) -> Option<i64> {
        self.terms.is_empty().then_some(self.constant)
    }

    pub fn scale(&self, k: i64) -> Affine {
        if k == 0 {
            return Affine::constant(0);
        }
        Affine {
            terms: self.terms.iter().map(|(a, c)| (a.clone(), c.wrapping_mul(k))).collect(),
            constant: self.constant.wrapping_mul(k),
        }
    }

    pub fn plus(&self, other: &Affine) -> Affine {
        let mut terms = self.terms.clone();
        for (a, c) in &other.terms {
            let entry = terms.entry(a.clone()).or_insert(0);
            *entry = entry.wrapping_add(*c);
        }
        terms.retain(|_, c| *c != 0);
        Affine { terms, constant: self.constant.wrapping_add(other.constant) }
    }

    pub fn coeff_of_var(&self, v: &str) -> i64 {
        self.terms.get(&Expr::Var(v.to_string())).copied().unwrap_or(0)
    }

    /// `Some((a, rest))` with `self == a*v + rest` when `v` does not occur
    /// inside any other atom.
    pub fn split_var(&self, v: &str) -> Option<(i64, Affine)> {
        let key = Expr::Var(v.to_string());
        for atom in self.terms.keys() {
            if *atom != key {
                let mut vars = std::collections::BTreeSet::new();
                atom.scalars(&mut vars);
                if vars.contains(v) {
                    return None;
                }
            }
        }
        let mut rest = self.clone();
        let a = rest.terms.remove(&key).unwrap_or(0);
        Some((a, rest))
    }

    /// Canonical expression: atoms in order, constant last.
    pub fn to_expr(&self) -> Expr {
        let mut acc: Option<Expr> = None;
        for (atom, &c) in &self.terms {
            let mag = c.unsigned_abs() as i64;
            let term = if mag == 1 { atom.clone() } else { Expr::mul(Expr::Const(mag), atom.clone()) };
            acc = Some(match acc {
                None if c < 0 => Expr::Neg(Box::new(term)),
                None => term,
                Some(e) if c < 0 => Expr::sub(e, term),
                Some(e) => Expr::add(e, term),
            });
        }
        match acc {
            None => Expr::Const(self.constant),
            Some(e) if self.constant > 0 => Expr::add(e, Expr::Const(self.constant)),
            Some(e) if self.constant < 0 => Expr::sub(e, Expr::Const(-(self.constant as i128) as i64)),
            Some(e) => e,
        }
    }
}

/// Normalize an expression through its linear form.
pub fn simplify(e: &Expr) -> Expr {
    Affine::from_expr(e).to_expr()
}
