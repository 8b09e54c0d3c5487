// SPDX-License-Identifier: Apache-2.0

mod common;

use proptest::prelude::*;
use tileproof::affine::simplify;
use tileproof::exec::{eval_expr, run_random, RunConfig, State};
use tileproof::frontend::ast::{BinOp, Expr};
use tileproof::frontend::parse;
use tileproof::frontend::pretty::print_program;
use tileproof::miner::{mine, observation_specs, MinerConfig};
use tileproof::smt::eval::eval;
use tileproof::smt::{plain_expr, Model, Value};
use tileproof::tiler::{simplify_interval, Tile};

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-9i64..10).prop_map(Expr::Const),
        prop_oneof![Just("x"), Just("y"), Just("l")].prop_map(Expr::var),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
            (inner.clone(), prop_oneof![-4i64..0, 1i64..5])
                .prop_map(|(a, d)| Expr::bin(BinOp::Div, a, Expr::Const(d))),
            (inner.clone(), prop_oneof![-4i64..0, 1i64..5])
                .prop_map(|(a, d)| Expr::bin(BinOp::Mod, a, Expr::Const(d))),
            inner.prop_map(|a| Expr::Neg(Box::new(a))),
        ]
    })
}

fn state(x: i64, y: i64, l: i64) -> State {
    let mut s = State::default();
    for (k, v) in [("x", x), ("y", y), ("l", l)] {
        s.scalars.insert(k.into(), v);
    }
    s
}

fn model(x: i64, y: i64, l: i64) -> Model {
    [("x", x), ("y", y), ("l", l)].into_iter().map(|(k, v)| (k.to_string(), Value::Int(v))).collect()
}

fn stmt(depth: u32) -> BoxedStrategy<String> {
    let simple = prop_oneof![
        (expr(), -2i64..3).prop_map(|(e, c)| format!("A[l + {c}] := {e};")),
        expr().prop_map(|e| format!("x := {e};")),
        expr().prop_map(|e| format!("assume({e} != 3);")),
    ];
    if depth == 0 {
        return simple.boxed();
    }
    prop_oneof![
        simple,
        (expr(), expr(), stmt(depth - 1), stmt(depth - 1))
            .prop_map(|(a, b, t, e)| format!("if ({a} < {b}) {{ {t} }} else {{ {e} }}")),
    ]
    .boxed()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    /// Normalization keeps the value wherever the original evaluates.
    #[test]
    fn simplify_preserves_values(e in expr(), x in -20i64..20, y in -20i64..20, l in -20i64..20) {
        let s = state(x, y, l);
        if let Ok(v) = eval_expr(&s, &e) {
            prop_assert_eq!(eval_expr(&s, &simplify(&e)), Ok(v));
        }
    }

    /// The interpreter and the solver-side evaluator share one arithmetic.
    #[test]
    fn interpreter_matches_term_semantics(e in expr(), x in -20i64..20, y in -20i64..20, l in -20i64..20) {
        if let Ok(v) = eval_expr(&state(x, y, l), &e) {
            prop_assert_eq!(eval(&plain_expr(&e), &model(x, y, l)), Some(Value::Int(v)));
        }
    }

    #[test]
    fn programs_round_trip(body in proptest::collection::vec(stmt(2), 1..4)) {
        let src = format!(
            "program g; int N, x, y; counter l; int A[N + 4];
             for (l := 0; l < N; l := l + 1) {{ {} }}
             ensures forall j :: 0 <= j && j < N ==> A[j] >= x;",
            body.join(" ")
        );
        let p = parse(&src).unwrap();
        let q = parse(&print_program(&p)).unwrap();
        prop_assert_eq!(p, q);
    }

    /// A closed interval, when found, denotes exactly the disjunction.
    #[test]
    fn closed_tiles_match_disjunction(
        a in prop_oneof![-3i64..0, 1i64..4],
        b in -5i64..6,
        offsets in proptest::collection::btree_set(0i64..4, 1..4),
    ) {
        let l = Expr::var("l");
        let exprs: Vec<Expr> = offsets
            .iter()
            .map(|o| simplify(&Expr::add(Expr::mul(Expr::Const(a), l.clone()), Expr::Const(b + o))))
            .collect();
        let Some(closed) = simplify_interval(&exprs, "l") else {
            // only contiguous offsets close
            let contiguous = offsets.iter().max().unwrap() - offsets.iter().min().unwrap() + 1 == offsets.len() as i64;
            prop_assert!(!contiguous);
            return Ok(());
        };
        let tile = Tile {
            array: "A".into(),
            counter: "l".into(),
            trip: Expr::Const(8),
            init_exprs: exprs.clone(),
            exprs,
            closed: Some(closed),
            source: None,
        };
        for lv in 0..8 {
            for jv in -40..40 {
                let s = {
                    let mut s = State::default();
                    s.scalars.insert("#l".into(), lv);
                    s.scalars.insert("#j".into(), jv);
                    s
                };
                let (lx, jx) = (Expr::var("#l"), Expr::var("#j"));
                let d = tileproof::exec::eval_bool(&s, &tile.formula_at(&lx, &jx)).unwrap();
                let c = tileproof::exec::eval_bool(&s, &tile.closed_at(&lx, &jx).unwrap()).unwrap();
                prop_assert_eq!(d, c, "l={} j={}", lv, jv);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn mining_is_a_function_of_the_seed(seed in any::<u64>(), pick in 0usize..15) {
        let all = common::benchmarks();
        let (_, src) = &all[pick % all.len()];
        let p = parse(src).unwrap();
        let specs = observation_specs(&p);
        let cfg = RunConfig { seed, ..RunConfig::default() };
        let once = run_random(&p, &cfg, &specs).map(|t| mine(&p, &specs, &t, &MinerConfig::default()));
        let twice = run_random(&p, &cfg, &specs).map(|t| mine(&p, &specs, &t, &MinerConfig::default()));
        prop_assert_eq!(once.is_ok(), twice.is_ok());
        if let (Ok(a), Ok(b)) = (once, twice) {
            prop_assert_eq!(a, b);
        }
    }
}
