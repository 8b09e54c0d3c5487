// SPDX-License-Identifier: Apache-2.0

use tileproof::smt::eval::holds;
use tileproof::smt::{Expectation, Script, Sort, SolverConfig, Status, Term};

fn solver() -> SolverConfig {
    SolverConfig::locate(None).expect("z3 on PATH or TILEPROOF_SOLVER")
}

#[test]
fn trivial_answers() {
    let s = solver();
    assert_eq!(s.check("(assert false)(check-sat)", 5000).status, Status::Unsat);
    let r = s.check("(declare-fun x () Int)(assert (= x 3))(check-sat)(get-model)", 5000);
    assert_eq!(r.status, Status::Sat);
    assert_eq!(r.model.unwrap()["x"].as_int(), Some(3));
    assert_eq!(s.check("(assert (= y 1))(check-sat)", 5000).status, Status::Crash);
}

#[test]
fn one_millisecond_budget_times_out() {
    let r = solver().check("(assert false)(check-sat)", 1);
    assert_eq!(r.status, Status::Timeout);
}

#[test]
fn returned_models_satisfy_their_scripts() {
    let mut sc = Script::new(Expectation::SatMeansCex);
    sc.declare("A", Sort::IntArray);
    sc.declare("i", Sort::Int);
    sc.declare("k", Sort::Int);
    let a2 = Term::store(Term::var("A"), Term::var("i"), Term::Int(5));
    let goal = Term::and([
        Term::eq(Term::select(a2, Term::var("k")), Term::Int(-2)),
        Term::lt(Term::var("i"), Term::var("k")),
        Term::eq(Term::select(Term::var("A"), Term::Int(3)), Term::Int(11)),
    ]);
    sc.assert(goal.clone());
    let r = solver().check(&sc.to_smt2(), 5000);
    assert_eq!(r.status, Status::Sat);
    assert_eq!(holds(&goal, &r.model.unwrap()), Some(true));
}
