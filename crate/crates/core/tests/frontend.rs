// SPDX-License-Identifier: Apache-2.0

use std::fs;

use tileproof::frontend::ast::{Expr, Stmt};
use tileproof::frontend::pretty::print_program;
use tileproof::frontend::{parse, FrontendError};

mod common;
use common::benchmarks;

#[test]
fn every_benchmark_parses_and_round_trips() {
    for (name, src) in benchmarks() {
        let p = parse(&src).unwrap_or_else(|e| panic!("{name}: {}", e.render(&name)));
        assert_eq!(p.name, name);
        let printed = print_program(&p);
        let q = parse(&printed).unwrap_or_else(|e| panic!("{name} reprint: {}\n{printed}", e.render(&name)));
        assert_eq!(p, q, "{name}\n{printed}");
    }
}

#[test]
fn period4_has_one_loop_over_count_quarter() {
    let src = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/benchmarks/period-4.tla")).unwrap();
    let p = parse(&src).unwrap();
    let loops = p.loops();
    assert_eq!(loops.len(), 1);
    assert_eq!(loops[0].trip.to_string(), "COUNT / 4");
    assert_eq!(p.post.len(), 1);
    assert_eq!(p.post[0].to_string(), "forall j :: 0 <= j && j < COUNT ==> volArray[j] >= MIN || volArray[j] == 0");
    // the induction variable is dead after the loop
    assert!(!matches!(&p.body, Stmt::Seq(items) if items.iter().any(|s| matches!(s, Stmt::If(..)))));
}

#[test]
fn vacuous_post_on_empty_body() {
    let p = parse("int N; int A[N]; ensures forall j :: false ==> A[j] == 0;").unwrap();
    assert_eq!(p.body, Stmt::Skip);
}

fn err(src: &str) -> FrontendError {
    parse(src).expect_err("should be rejected")
}

#[test]
fn counter_discipline_mutants_are_rejected() {
    let base = "int N, x; counter l; int A[N];\n";
    let mutants = [
        "for (l := 0; l < N; l := l + 1) { if (x > 0) { l := 5; } }",
        "for (l := 0; l < N; l := l + 1) { A[l] := 0; } l := 5;",
        "l := 1; for (l := 0; l < N; l := l + 1) { A[l] := 0; }",
        "for (l := 0; l < N; l := l + 1) { l++; }",
        "for (l := 0; l < N; l := l + 1) { A[l] := 0; } for (l := 0; l < N; l := l + 1) { A[l] := 1; }",
    ];
    for m in mutants {
        let e = err(&format!("{base}{m}"));
        assert!(matches!(e, FrontendError::CounterDiscipline { .. }), "{m}: {e}");
    }
}

#[test]
fn counter_assignment_diagnostic_points_at_the_assignment() {
    let src = "int N, x;\ncounter l;\nint A[N];\nfor (l := 0; l < N; l := l + 1) {\n  if (x > 0) { l := 5; }\n}\n";
    let e = err(src);
    assert_eq!(e.render("t.tla").split(": ").next().unwrap(), "t.tla:5:16");
}

#[test]
fn diagnostics_carry_positions() {
    let e = err("int N;\nint A[N];\nA[0] = y;\n");
    assert_eq!(e, FrontendError::Undeclared { pos: tileproof::frontend::Pos { line: 3, col: 8 }, name: "y".into() });
    assert!(e.render("f.tla").starts_with("f.tla:3:8: "));
    let e = err("int N;\nN = ;\n");
    assert!(matches!(e, FrontendError::Syntax { .. }));
    assert_eq!(e.pos().line, 2);
    assert!(matches!(err("int N, N;"), FrontendError::Redeclared { .. }));
    assert!(matches!(err("int N; int A[N]; N = A;"), FrontendError::Kind { .. }));
    assert!(matches!(err("int N, i; int A[N]; for (i = 0; i < N; i++) { i = 3; }"), FrontendError::CounterDiscipline { .. }));
    assert!(matches!(
        err("int N; int A[N]; ensures forall j :: A[j] > 0 ==> A[j] > 1;"),
        FrontendError::Assertion { .. }
    ));
    assert!(matches!(err("int N, j; int A[N]; ensures forall j :: j < N ==> A[j] > 1;"), FrontendError::Assertion { .. }));
}

#[test]
fn trip_count_must_be_loop_invariant() {
    let e = err("int N; counter l; int A[N]; for (l := 0; l < N; l := l + 1) { N := N - 1; }");
    assert!(matches!(e, FrontendError::Loop { .. }), "{e}");
}

#[test]
fn counting_loops_get_fresh_counters_and_exit_values() {
    let p = parse("int N, i, s; int A[N]; for (i = 0; i < N; i++) { A[i] = 0; } s = i;").unwrap();
    let loops = p.loops();
    assert_eq!(loops[0].counter, "l_i");
    assert!(p.counters.contains("l_i"));
    let Stmt::Seq(items) = &p.body else { panic!() };
    assert!(matches!(&items[1], Stmt::If(..)), "exit assignment kept when i is read later");
    assert_eq!(items[2], Stmt::Assign("s".into(), Expr::var("i")));

    let p = parse("int N, i, l_i; int A[N]; for (i = 0; i < N; i++) { A[i] = l_i; }").unwrap();
    assert_eq!(p.loops()[0].counter, "l_i_2");
}

#[test]
fn general_loops_need_trips() {
    let e = err("int M, i; int A[2 * M + 1]; for (i = 2 * M; i >= 0; i -= 2) { A[i] = 0; }");
    assert!(matches!(e, FrontendError::Loop { .. }));
    let p = parse("int M, i; int A[2 * M + 1]; for (i = 2 * M; i >= 0; i -= 2) trips(M + 1) { A[i] = 0; }").unwrap();
    assert_eq!(p.loops()[0].trip.to_string(), "M + 1");
    let printed = print_program(&p);
    assert!(printed.contains("if (l_i == 0)"), "{printed}");
}
