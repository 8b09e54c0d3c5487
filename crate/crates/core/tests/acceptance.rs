// SPDX-License-Identifier: Apache-2.0

//! Acceptance criteria, one test each. Every test prints a single
//! `criterion N (...): PASS|FAIL ...` line.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;
use std::time::Duration;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tileproof::cfg::CutPoint;
use tileproof::driver::{tiled_verify, RunPlan, Status, Verdict};
use tileproof::exec::{eval_all, eval_assertion, eval_bool, random_state, run, Machine, Observer, RunConfig, State};
use tileproof::frontend::ast::{BoolExpr, Expr, Loop, Program, QuantAssertion};
use tileproof::frontend::parse;
use tileproof::miner::CandStatus;
use tileproof::smt::{declare_free_ints, plain_bool, Expectation, Outcome, Script, Session, SolverConfig, Term};
use tileproof::tiler::{simplify_interval, strict_validate, Tile};
use tileproof::vcgen::{discharge, encode_t1, split_range, CheckTask, Ctx, Origin, Shape, TaskKind, TaskStatus, Tiles};

const VERIFIED: [&str; 11] = [
    "period-4",
    "init",
    "copy",
    "cpynrev",
    "evenodd",
    "revrefill",
    "largest",
    "smallest",
    "seqinit",
    "find",
    "array-update",
];
const VIOLATED: [&str; 3] = ["init-u", "copy-u", "skipped-u"];

fn session(timeout_ms: u64) -> Session {
    Session::new(SolverConfig::locate(None).expect("solver"), timeout_ms)
}

fn program(name: &str) -> Program {
    parse(&common::benchmark(name)).unwrap()
}

fn report(n: u32, what: &str, result: Result<String, String>) {
    match result {
        Ok(detail) => println!("criterion {n} ({what}): PASS {detail}"),
        Err(detail) => {
            println!("criterion {n} ({what}): FAIL {detail}");
            panic!("criterion {n} failed: {detail}");
        }
    }
}

/// Default-plan verdicts of the fourteen benchmarks and the decoy, computed
/// once and shared.
fn verdicts() -> &'static BTreeMap<String, Verdict> {
    static V: OnceLock<BTreeMap<String, Verdict>> = OnceLock::new();
    V.get_or_init(|| {
        let s = session(10_000);
        VERIFIED
            .iter()
            .chain(&VIOLATED)
            .chain(&["copy-decoy"])
            .map(|n| (n.to_string(), tiled_verify(&program(n), &RunPlan::default(), &s)))
            .collect()
    })
}

#[test]
fn criterion_1_verdict_parity() {
    let v = verdicts();
    let mut right = 0;
    let mut wrong = Vec::new();
    let mut wall = Duration::ZERO;
    for name in VERIFIED.iter().chain(&VIOLATED) {
        let r = &v[*name];
        wall += r.wall;
        let ok = if VIOLATED.contains(name) {
            let p = program(name);
            r.status == Status::Violated
                && r.cex.as_ref().is_some_and(|c| {
                    eval_all(&c.initial, &p.pre) == Ok(true)
                        && run(&p, c.initial.clone()).is_ok_and(|f| eval_all(&f, &p.post) == Ok(false))
                })
        } else {
            r.status == Status::Verified
        };
        if ok {
            right += 1;
        } else {
            wrong.push(format!("{name}={:?}", r.status));
        }
    }
    let detail = format!("{right}/14 in {:.1}s {wrong:?}", wall.as_secs_f64());
    report(1, "verdict parity", if right >= 12 && wall < Duration::from_secs(120) { Ok(detail) } else { Err(detail) });
}

fn parse_bool(vars: &str, b: &str) -> BoolExpr {
    parse(&format!("int {vars}; ensures {b};")).unwrap().post[0].body.clone()
}

/// Unsat of `a xor b`.
fn equivalent(a: &BoolExpr, b: &BoolExpr, s: &Session) -> bool {
    let (x, y) = (plain_bool(a), plain_bool(b));
    let mut sc = Script::new(Expectation::UnsatMeansPass);
    sc.assert(Term::or([
        Term::and([x.clone(), Term::not(y.clone())]),
        Term::and([Term::not(x), y]),
    ]));
    declare_free_ints(&mut sc);
    Outcome::of(s.check("EQUIV", "t", &sc).status, sc.expect) == Outcome::Pass
}

#[test]
fn criterion_2_tile_ground_truth() {
    let check = || -> Result<String, String> {
        let s = session(10_000);
        let p4 = &verdicts()["period-4"];
        let closed = p4
            .tiles
            .iter()
            .find(|t| t.array == "volArray")
            .and_then(|t| t.closed_form.clone())
            .ok_or("period-4 has no closed tile")?;
        let want = parse_bool("i, j", "4 * i - 4 <= j && j < 4 * i");
        if !equivalent(&parse_bool("i, j", &closed), &want, &s) {
            return Err(format!("period-4 closed form {closed}"));
        }

        let p = program("array-update");
        let shape = Shape::of(&p).unwrap();
        let tiles = Tiles::compute(&shape, &s);
        let t = tiles.updated[0]["A"].as_ref().map_err(|e| e.to_string())?;
        let mut init: Vec<String> = t.init_exprs.iter().map(|e| e.to_string()).collect();
        init.sort();
        if init != ["l", "l + 1"] {
            return Err(format!("array-update initial tile {init:?}"));
        }
        let refined = t.formula_at(&Expr::var("l"), &Expr::var("j"));
        if !equivalent(&refined, &parse_bool("j, l", "j == l"), &s) {
            return Err(format!("array-update refined tile {refined}"));
        }
        Ok(format!("period-4: {closed}; array-update: {{l, l + 1}} -> {refined}"))
    };
    report(2, "tile ground truth", check());
}

/// Initial states of size 1..=6 drawn deterministically; a state counts as
/// explored once its pre-condition and assumptions are decided.
fn concrete_runs(p: &Program, per_size: usize, mut visit: impl FnMut(&State)) -> usize {
    let mut explored = 0;
    for size in 1..=6 {
        let cfg = RunConfig { array_size: size, value_range: (-4, 8), ..RunConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(size as u64);
        for _ in 0..per_size {
            let Ok(s) = random_state(p, &cfg, &mut rng) else { continue };
            explored += 1;
            if eval_all(&s, &p.pre) == Ok(true) {
                visit(&s);
            }
        }
    }
    explored
}

#[test]
fn criterion_3_soundness_by_execution() {
    let v = verdicts();
    let mut lines = Vec::new();
    let mut bad = Vec::new();
    for name in v.iter().filter(|(_, r)| r.status == Status::Verified).map(|(n, _)| n) {
        let p = program(name);
        let (mut executed, mut violations) = (0, 0);
        let explored = concrete_runs(&p, 2000, |s| {
            if let Ok(f) = run(&p, s.clone()) {
                executed += 1;
                if eval_all(&f, &p.post) != Ok(true) {
                    violations += 1;
                }
            }
        });
        lines.push(format!("{name}:{executed}/{explored}"));
        if violations > 0 || explored < 10_000 {
            bad.push(format!("{name}: {violations} violations, {explored} states"));
        }
    }
    let detail = lines.join(" ");
    report(3, "soundness by execution", if bad.is_empty() { Ok(detail) } else { Err(format!("{bad:?}")) });
}

/// Loop-entry states of one loop.
struct Entries {
    k: usize,
    out: Vec<State>,
}

impl Observer for Entries {
    fn iteration_start(&mut self, id: usize, _iter: i64, s: &State) {
        if id == self.k {
            self.out.push(s.clone());
        }
    }
}

/// `forall j: tile(l, j) && range(j) ==> body(j)` by finite expansion.
fn slice(s: &State, tile: &Tile, q: &QuantAssertion, l: i64) -> Result<bool, String> {
    let m = s.arrays.values().map(|a| a.len() as i64).max().unwrap_or(0) + 4;
    let (range, body) = q.instantiate(&[Expr::var("#j")]);
    let tau = tile.at(&Expr::Const(l), &Expr::var("#j"));
    let mut s = s.clone();
    for j in -m..=m {
        s.scalars.insert("#j".into(), j);
        let hit = eval_bool(&s, &tau).map_err(|e| e.to_string())? && eval_bool(&s, &range).map_err(|e| e.to_string())?;
        if hit && !eval_bool(&s, &body).map_err(|e| e.to_string())? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// One body execution from `s`.
fn step(p: &Program, lp: &Loop, s: &State) -> Option<State> {
    let mut obs = ();
    let mut m = Machine::new(p, s.clone(), &mut obs);
    m.exec(&lp.body).ok()?;
    Some(m.state)
}

/// Concrete slice establishment and preservation over reachable loop-entry states. Returns the number
/// of instances checked and the failures.
fn finite_slice_checks(p: &Program, v: &Verdict, s: &Session) -> (usize, Vec<String>) {
    let shape = Shape::of(p).unwrap();
    let tiles = Tiles::compute(&shape, s);
    let proven: Vec<(CutPoint, QuantAssertion)> = v
        .candidates
        .iter()
        .filter(|c| c.status == CandStatus::Proven)
        .map(|c| (c.cutpoint, c.assertion.clone()))
        .collect();
    let mut checked = 0;
    let mut failures = Vec::new();
    for (k, lp) in shape.loops.iter().enumerate() {
        let seg = shape.loop_id(k);
        let (mut ws, mut wa) = (BTreeSet::new(), BTreeSet::new());
        lp.body.write_set(&mut ws, &mut wa);
        ws.insert(lp.counter.clone());
        let mentions = |q: &QuantAssertion| !q.free_scalars().is_disjoint(&ws) || !q.arrays().is_disjoint(&wa);
        let inv: Vec<&QuantAssertion> =
            proven.iter().filter(|(c, q)| *c == CutPoint::Head(k + 1) && !mentions(q)).map(|(_, q)| q).collect();
        // goals whose star checks passed
        let passed = |o: &Origin| {
            [TaskKind::T2Star, TaskKind::T3Star].iter().all(|kind| {
                v.tasks.iter().any(|t| t.kind == *kind && t.segment == seg && t.goal == Some(*o) && t.status == TaskStatus::Pass)
            })
        };
        let mut goals = Vec::new();
        for o in v.tasks.iter().filter(|t| t.segment == seg).filter_map(|t| t.goal).collect::<BTreeSet<_>>() {
            if !passed(&o) {
                continue;
            }
            let q = match o {
                Origin::Post(i) => p.post[i].clone(),
                Origin::Candidate(i) => v.candidates[i].assertion.clone(),
                Origin::Pre(i) => p.pre[i].clone(),
            };
            let q = split_range(&q, &ws);
            if let Ok(t) = tiles.for_goal(k, &q.arrays()) {
                goals.push((q, t.clone()));
            }
        }
        if goals.is_empty() {
            continue;
        }
        let mut entries = Entries { k, out: Vec::new() };
        concrete_runs(p, 150, |s0| {
            let mut m = Machine::new(p, s0.clone(), &mut entries);
            let _ = m.exec(&p.body);
        });
        for st in &entries.out {
            let globals = p.global_assumptions().iter().all(|g| eval_bool(st, g) == Ok(true));
            if !globals || inv.iter().any(|q| eval_assertion(st, q) != Ok(true)) {
                continue;
            }
            let Ok(l) = st.scalar(&lp.counter) else { continue };
            let Some(next) = step(p, lp, st) else { continue };
            for (q, tile) in &goals {
                let before: Vec<bool> = (0..l).map(|l2| slice(st, tile, q, l2) == Ok(true)).collect();
                if before.iter().all(|b| *b) {
                    checked += 1;
                    if slice(&next, tile, q, l) != Ok(true) {
                        failures.push(format!("T2 {} l={l}", q.body));
                    }
                }
                for (l2, held) in before.iter().enumerate() {
                    if *held {
                        checked += 1;
                        if slice(&next, tile, q, l2 as i64) != Ok(true) {
                            failures.push(format!("T3 {} l={l} l'={l2}", q.body));
                        }
                    }
                }
            }
        }
    }
    (checked, failures)
}

#[test]
fn criterion_4_finite_expansion_agrees() {
    let s = session(10_000);
    let mut lines = Vec::new();
    let mut bad = Vec::new();
    for (name, v) in verdicts().iter().filter(|(_, v)| v.status == Status::Verified) {
        let (checked, failures) = finite_slice_checks(&program(name), v, &s);
        lines.push(format!("{name}:{checked}"));
        if !failures.is_empty() {
            bad.push(format!("{name}: {:?}", &failures[..failures.len().min(3)]));
        }
    }
    let total: usize = lines.iter().filter_map(|l| l.rsplit(':').next()?.parse::<usize>().ok()).sum();
    if total == 0 {
        bad.push("no instance checked".into());
    }
    let detail = format!("{total} instances ({})", lines.join(" "));
    report(4, "finite expansion of the slice checks", if bad.is_empty() { Ok(detail) } else { Err(format!("{bad:?}")) });
}

/// A tile of distinct affine expressions in `l`.
#[derive(Debug, Clone)]
struct TileCase {
    exprs: Vec<(i64, i64)>,
    trip: i64,
    size: i64,
    lo: i64,
    hi: i64,
}

impl TileCase {
    fn random(rng: &mut ChaCha8Rng) -> TileCase {
        use rand::Rng;
        let coef = |rng: &mut ChaCha8Rng| [1, 2, 3, -1, -2][rng.gen_range(0..5)];
        let a = coef(rng);
        let k: usize = rng.gen_range(1..=3);
        let mut exprs: Vec<(i64, i64)> = Vec::new();
        if rng.gen_bool(0.3) {
            let b = rng.gen_range(-4..=4);
            exprs.extend((0..k as i64).map(|i| (a, b + i)));
        } else {
            while exprs.len() < k {
                let e = (if rng.gen_bool(0.8) { a } else { coef(rng) }, rng.gen_range(-4..=4));
                if !exprs.contains(&e) {
                    exprs.push(e);
                }
            }
        }
        let lo = rng.gen_range(-2..=3);
        TileCase { exprs, trip: rng.gen_range(1..=8), size: rng.gen_range(0..=12), lo, hi: rng.gen_range(lo..=12) }
    }

    fn exprs(&self) -> Vec<Expr> {
        self.exprs
            .iter()
            .map(|(a, b)| Expr::add(Expr::mul(Expr::Const(*a), Expr::var("l")), Expr::Const(*b)))
            .collect()
    }

    fn set(&self, l: i64) -> BTreeSet<i64> {
        self.exprs.iter().map(|(a, b)| a * l + b).collect()
    }

    fn tile(&self) -> Tile {
        let exprs = self.exprs();
        Tile {
            array: "A".into(),
            counter: "l".into(),
            trip: Expr::var("E"),
            init_exprs: exprs.clone(),
            closed: simplify_interval(&exprs, "l"),
            exprs,
            source: None,
        }
    }

    fn program(&self) -> Program {
        parse(&format!(
            "int E, N; counter l; int A[N];
             assume(E == {}); assume(N == {});
             for (l := 0; l < E; l := l + 1) {{ A[0] := 0; }}
             ensures forall j :: {} <= j && j < {} ==> A[j] == 0;",
            self.trip, self.size, self.lo, self.hi
        ))
        .unwrap()
    }

    fn t1_holds(&self) -> bool {
        let covered = (self.lo..self.hi)
            .all(|j| (0..self.size).contains(&j) && (0..self.trip).any(|l| self.set(l).contains(&j)));
        let in_bounds = (0..self.trip).all(|l| self.set(l).iter().all(|j| (0..self.size).contains(j)));
        covered && in_bounds
    }

    fn strict_holds(&self) -> [bool; 3] {
        let e = self.trip;
        let disjoint = (0..e).all(|l| (0..e).all(|m| l == m || self.set(l).is_disjoint(&self.set(m))));
        let range_like = (0..e).all(|l| {
            let s = self.set(l);
            let (lo, hi) = (*s.first().unwrap(), *s.last().unwrap());
            (lo..=hi).all(|j| s.contains(&j))
        });
        let compact = (0..e - 1).all(|l| {
            let (s, t) = (self.set(l), self.set(l + 1));
            s.iter().all(|j1| t.iter().all(|j2| (j1 + 1..*j2).all(|j| s.contains(&j) || t.contains(&j))))
        });
        [disjoint, range_like, compact]
    }
}

#[test]
fn criterion_5_oracles_on_random_tiles() {
    let check = || -> Result<String, String> {
        let s = session(10_000);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut closed = 0;
        for n in 0..50 {
            let c = TileCase::random(&mut rng);
            let tile = c.tile();
            // closed form against the disjunction
            let interval = (0..8).all(|l| {
                let set = c.set(l);
                let (lo, hi) = (*set.first().unwrap(), *set.last().unwrap());
                (lo..=hi).all(|j| set.contains(&j))
            });
            match &tile.closed {
                Some(_) => {
                    closed += 1;
                    for l in 0..8 {
                        for j in -40..40 {
                            let mut st = State::default();
                            st.scalars.insert("j".into(), j);
                            let b = tile.closed_at(&Expr::Const(l), &Expr::var("j")).unwrap();
                            if eval_bool(&st, &b) != Ok(c.set(l).contains(&j)) {
                                return Err(format!("case {n}: closed form differs at l={l} j={j} {c:?}"));
                            }
                        }
                    }
                }
                None if interval && c.exprs.iter().all(|(a, _)| *a == c.exprs[0].0) => {
                    return Err(format!("case {n}: contiguous tile not simplified {c:?}"));
                }
                None => {}
            }
            // T1
            let p = c.program();
            let shape = Shape::of(&p).unwrap();
            let tiles = Tiles::default();
            let ctx = Ctx { program: &p, shape: &shape, tiles: &tiles, strict: false };
            let task = CheckTask {
                kind: TaskKind::T1,
                segment: "t".into(),
                array: None,
                goal: None,
                advisory: false,
                payload: encode_t1(&ctx, &shape.loops[0], &tile, &p.post[0]),
            };
            let got = discharge(&task, &s).status;
            let want = if c.t1_holds() { TaskStatus::Pass } else { TaskStatus::Fail };
            if got != want {
                return Err(format!("case {n}: T1 {got:?}, brute force {want:?} {c:?}"));
            }
            // strict properties
            let e = BoolExpr::rel(tileproof::frontend::ast::RelOp::Eq, Expr::var("E"), Expr::Const(c.trip));
            let r = strict_validate(&tile, &Expr::var("E"), &[e], &s, "t");
            let got = [r.disjoint, r.range_like, r.compact].map(|o| o == Outcome::Pass);
            if got != c.strict_holds() {
                return Err(format!("case {n}: strict {got:?}, brute force {:?} {c:?}", c.strict_holds()));
            }
        }
        Ok(format!("50 cases, {closed} with closed forms"))
    };
    report(5, "oracles on random tiles", check());
}

#[test]
fn criterion_6_decoy_lifecycle() {
    let v = &verdicts()["copy-decoy"];
    let dropped: Vec<String> =
        v.candidates.iter().filter(|c| c.status == CandStatus::Dropped).map(|c| c.assertion.to_string()).collect();
    let detail = format!("{:?}, dropped {dropped:?}", v.status);
    let ok = v.status == Status::Verified && dropped.len() == 1 && dropped[0].contains("a[j] != b[j]");
    report(6, "decoy candidate lifecycle", if ok { Ok(detail) } else { Err(detail) });
}

fn starved(name: &str, seed: u64) -> Status {
    let plan = RunPlan { seed, ..RunPlan::default() };
    tiled_verify(&program(name), &plan, &session(1)).status
}

#[test]
fn criterion_7_starved_solver_is_never_verified() {
    let names: Vec<&str> = VERIFIED.iter().chain(&VIOLATED).copied().collect();
    let seen = std::cell::RefCell::new(BTreeMap::new());
    let cfg = proptest::test_runner::Config { cases: 12, failure_persistence: None, ..Default::default() };
    let result = proptest::test_runner::TestRunner::new(cfg).run(&(0..names.len(), 0u64..1000), |(i, seed)| {
        let st = starved(names[i], seed);
        seen.borrow_mut().insert(names[i], st);
        prop_assert_eq!(st, Status::Inconclusive);
        Ok(())
    });
    let seen = seen.into_inner();
    let detail = format!("{} benchmarks {seen:?}", seen.len());
    report(7, "1 ms timeouts give Inconclusive", result.map(|_| detail).map_err(|e| e.to_string()));
}
