// SPDX-License-Identifier: Apache-2.0

mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tileproof::cfg::build_cfg;
use tileproof::exec::{random_state, run, run_cfg, run_random, RunConfig, State};
use tileproof::frontend::parse;
use tileproof::miner::observation_specs;

#[test]
fn syntax_and_graph_interpreters_agree() {
    for (name, src) in common::benchmarks() {
        let p = parse(&src).unwrap();
        let g = build_cfg(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for size in 0..6 {
            let cfg = RunConfig { array_size: size, ..RunConfig::default() };
            for _ in 0..20 {
                let s = random_state(&p, &cfg, &mut rng).unwrap();
                let a = run(&p, s.clone());
                let b = run_cfg(&g, s, 100_000);
                assert_eq!(a.is_ok(), b.is_ok(), "{name}");
                if let (Ok(a), Ok(b)) = (a, b) {
                    assert_eq!(a.arrays, b.arrays, "{name}");
                    for v in &p.scalars {
                        assert_eq!(a.scalars[v], b.scalars[v], "{name}: {v}");
                    }
                }
            }
        }
    }
}

#[test]
fn traces_depend_only_on_the_seed() {
    let p = parse(&common::benchmark("copy-decoy")).unwrap();
    let specs = observation_specs(&p);
    let t = |seed| run_random(&p, &RunConfig { seed, ..RunConfig::default() }, &specs).unwrap();
    assert_eq!(t(3), t(3));
    assert_ne!(t(3), t(4));
    assert_eq!(t(3).len(), 10 * 8 * 2);
}

#[test]
fn period4_fills_blocks() {
    let p = parse(&common::benchmark("period-4")).unwrap();
    let mut s = State::default();
    s.scalars.insert("COUNT".into(), 8);
    s.scalars.insert("MIN".into(), 2);
    s.scalars.insert("i".into(), 0);
    s.scalars.insert("l_i".into(), 0);
    s.arrays.insert("volArray".into(), vec![-1; 8]);
    let out = run(&p, s).unwrap();
    assert_eq!(out.arrays["volArray"], [5, 7, 3, 0, 5, 7, 3, 0]);
}

#[test]
fn general_loops_match_counting_loops() {
    let general =
        parse("int M, i; int A[2 * M + 1]; for (i = 2 * M; i >= 0; i -= 2) trips(M + 1) { A[i] = i + 1; }").unwrap();
    let counting = parse("int M, i; int A[2 * M + 1]; for (i = 0; i <= M; i++) { A[2 * i] = 2 * i + 1; }").unwrap();
    for m in 0..=5 {
        let mut s = State::default();
        s.scalars.insert("M".into(), m);
        s.scalars.insert("i".into(), 0);
        s.arrays.insert("A".into(), vec![0; (2 * m + 1) as usize]);
        let mut g = s.clone();
        for c in &general.counters {
            g.scalars.insert(c.clone(), 0);
        }
        let mut c = s.clone();
        for k in &counting.counters {
            c.scalars.insert(k.clone(), 0);
        }
        assert_eq!(run(&general, g).unwrap().arrays, run(&counting, c).unwrap().arrays, "M = {m}");
    }
}
