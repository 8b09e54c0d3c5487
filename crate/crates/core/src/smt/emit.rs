// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write;

use super::{Op, Quant, Sort, Term};

/// How a task reads the solver's answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Expectation {
    /// The asserted formula is the negation of an obligation.
    UnsatMeansPass,
    /// A model is a counterexample.
    SatMeansCex,
}

/// A one-shot SMT-LIB2 query.
#[derive(Debug, Clone)]
pub struct Script {
    pub decls: Vec<(String, Sort)>,
    pub asserts: Vec<Term>,
    pub expect: Expectation,
}

const RESERVED: &[&str] = &[
    "and", "or", "not", "ite", "let", "forall", "exists", "select", "store", "div", "mod", "abs", "true", "false",
    "distinct", "par", "as", "Int", "Bool", "Array", "assert", "_",
];

fn symbol(out: &mut String, name: &str) {
    let plain = !name.is_empty()
        && !name.starts_with(|c: char| c.is_ascii_digit())
        && name.chars().all(|c| c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c))
        && !RESERVED.contains(&name);
    if plain {
        out.push_str(name);
    } else {
        let _ = write!(out, "|{name}|");
    }
}

fn term(out: &mut String, t: &Term) {
    match t {
        Term::Int(c) if *c < 0 => {
            let _ = write!(out, "(- {})", c.unsigned_abs());
        }
        Term::Int(c) => {
            let _ = write!(out, "{c}");
        }
        Term::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Term::Var(v) => symbol(out, v),
        Term::App(op, args) => {
            out.push('(');
            out.push_str(op.symbol());
            for a in args {
                out.push(' ');
                term(out, a);
            }
            out.push(')');
            debug_assert!(*op != Op::Neg || args.len() == 1);
        }
        Term::Quant(q, vars, body) => {
            out.push_str(match q {
                Quant::Forall => "(forall (",
                Quant::Exists => "(exists (",
            });
            for (i, (v, s)) in vars.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                out.push('(');
                symbol(out, v);
                let _ = write!(out, " {})", s.smt());
            }
            out.push_str(") ");
            term(out, body);
            out.push(')');
        }
    }
}

/// SMT-LIB2 text of a single term.
pub fn emit(t: &Term) -> String {
    let mut s = String::new();
    term(&mut s, t);
    s
}

impl Script {
    pub fn new(expect: Expectation) -> Self {
        Script { decls: Vec::new(), asserts: Vec::new(), expect }
    }

    pub fn declare(&mut self, name: impl Into<String>, sort: Sort) {
        let name = name.into();
        if !self.decls.iter().any(|(n, _)| *n == name) {
            self.decls.push((name, sort));
        }
    }

    pub fn assert(&mut self, t: Term) {
        if t != Term::Bool(true) {
            self.asserts.push(t);
        }
    }

    pub fn has_quantifier(&self) -> bool {
        self.asserts.iter().any(Term::has_quantifier)
    }

    /// Deterministic script text.
    pub fn to_smt2(&self) -> String {
        let mut out = String::new();
        let logic = if self.has_quantifier() { "AUFLIA" } else { "QF_AUFLIA" };
        let _ = writeln!(out, "(set-logic {logic})");
        for (n, s) in &self.decls {
            out.push_str("(declare-fun ");
            symbol(&mut out, n);
            let _ = writeln!(out, " () {})", s.smt());
        }
        for a in &self.asserts {
            out.push_str("(assert ");
            term(&mut out, a);
            out.push_str(")\n");
        }
        // a failed obligation is explained by its model as well
        out.push_str("(check-sat)\n(get-model)\n");
        out.push_str("(exit)\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terms_render_in_prefix_form() {
        let x = Term::var("x");
        assert_eq!(emit(&Term::eq(Term::add(x.clone(), Term::Int(1)), Term::Int(2))), "(= (+ x 1) 2)");
        let l = Term::var("l");
        let j = Term::var("j");
        let four_l = Term::mul(Term::Int(4), l);
        let tau = Term::and([
            Term::le(four_l.clone(), j.clone()),
            Term::lt(j.clone(), Term::add(four_l, Term::Int(4))),
        ]);
        assert_eq!(emit(&tau), "(and (<= (* 4 l) j) (< j (+ (* 4 l) 4)))");
        let q = Term::forall(vec![("j".into(), Sort::Int)], Term::implies(Term::lt(j.clone(), x), Term::Bool(false)));
        assert_eq!(emit(&q), "(forall ((j Int)) (=> (< j x) false))");
        assert_eq!(emit(&Term::Int(-3)), "(- 3)");
        assert_eq!(emit(&Term::var("and")), "|and|");
    }

    #[test]
    fn script_header() {
        let mut s = Script::new(Expectation::SatMeansCex);
        s.declare("x", Sort::Int);
        s.declare("x", Sort::Int);
        s.assert(Term::eq(Term::app(Op::Div, vec![Term::Int(4), Term::var("x")]), Term::Int(2)));
        let text = s.to_smt2();
        assert_eq!(
            text,
            "(set-logic QF_AUFLIA)\n(declare-fun x () Int)\n(assert (= (div 4 x) 2))\n(check-sat)\n(get-model)\n(exit)\n"
        );
        assert_eq!(text, s.to_smt2());
        let mut q = Script::new(Expectation::UnsatMeansPass);
        q.assert(Term::forall(vec![("j".into(), Sort::Int)], Term::eq(Term::var("j"), Term::var("j"))));
        assert!(q.to_smt2().starts_with("(set-logic AUFLIA)"));
    }
}
