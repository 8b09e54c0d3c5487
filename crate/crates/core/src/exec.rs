// SPDX-License-Identifier: Apache-2.0

//! Concrete interpreter, randomized trace runs, and finite evaluation of
//! assertions.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cfg::{Cfg, CutPoint, Label, NodeKind};
use crate::frontend::ast::{BinOp, BoolExpr, Expr, Loop, Program, QuantAssertion, Stmt};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("arithmetic overflow")]
    Overflow,
    #[error("division by zero")]
    DivByZero,
    #[error("index {index} out of bounds for `{array}`")]
    OutOfBounds { array: String, index: i64 },
    #[error("assumption does not hold")]
    AssumeFailed,
    #[error("precondition does not hold")]
    PreFalse,
    #[error("step limit exceeded")]
    StepLimit,
    #[error("`{0}` has no value")]
    Unbound(String),
    #[error("quantifier range is not bounded by the array sizes")]
    UnboundedRange,
    #[error("array `{0}` has a negative or oversized length")]
    BadSize(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct State {
    pub scalars: BTreeMap<String, i64>,
    pub arrays: BTreeMap<String, Vec<i64>>,
}

impl State {
    pub fn scalar(&self, v: &str) -> Result<i64, RunError> {
        self.scalars.get(v).copied().ok_or_else(|| RunError::Unbound(v.to_string()))
    }

    pub fn read(&self, a: &str, i: i64) -> Result<i64, RunError> {
        let arr = self.arrays.get(a).ok_or_else(|| RunError::Unbound(a.to_string()))?;
        usize::try_from(i)
            .ok()
            .and_then(|u| arr.get(u).copied())
            .ok_or_else(|| RunError::OutOfBounds { array: a.to_string(), index: i })
    }

    fn write(&mut self, a: &str, i: i64, v: i64) -> Result<(), RunError> {
        let arr = self.arrays.get_mut(a).ok_or_else(|| RunError::Unbound(a.to_string()))?;
        let slot = usize::try_from(i)
            .ok()
            .and_then(|u| arr.get_mut(u))
            .ok_or_else(|| RunError::OutOfBounds { array: a.to_string(), index: i })?;
        *slot = v;
        Ok(())
    }

    fn max_len(&self) -> i64 {
        self.arrays.values().map(|a| a.len() as i64).max().unwrap_or(0)
    }
}

pub fn eval_expr(s: &State, e: &Expr) -> Result<i64, RunError> {
    eval_with(s, e, &|_| None)
}

fn eval_with(s: &State, e: &Expr, bound: &dyn Fn(&str) -> Option<i64>) -> Result<i64, RunError> {
    match e {
        Expr::Const(c) => Ok(*c),
        Expr::Var(v) => bound(v).map_or_else(|| s.scalar(v), Ok),
        Expr::Read(a, i) => s.read(a, eval_with(s, i, bound)?),
        Expr::Neg(x) => eval_with(s, x, bound)?.checked_neg().ok_or(RunError::Overflow),
        Expr::Bin(op, a, b) => {
            let (a, b) = (eval_with(s, a, bound)?, eval_with(s, b, bound)?);
            match op {
                BinOp::Add => a.checked_add(b).ok_or(RunError::Overflow),
                BinOp::Sub => a.checked_sub(b).ok_or(RunError::Overflow),
                BinOp::Mul => a.checked_mul(b).ok_or(RunError::Overflow),
                BinOp::Div | BinOp::Mod if b == 0 => Err(RunError::DivByZero),
                BinOp::Div => a.checked_div_euclid(b).ok_or(RunError::Overflow),
                BinOp::Mod => a.checked_rem_euclid(b).ok_or(RunError::Overflow),
            }
        }
    }
}

pub fn eval_bool(s: &State, b: &BoolExpr) -> Result<bool, RunError> {
    eval_bool_with(s, b, &|_| None)
}

fn eval_bool_with(s: &State, b: &BoolExpr, bound: &dyn Fn(&str) -> Option<i64>) -> Result<bool, RunError> {
    Ok(match b {
        BoolExpr::True => true,
        BoolExpr::False => false,
        BoolExpr::Rel(op, x, y) => op.holds(eval_with(s, x, bound)?, eval_with(s, y, bound)?),
        BoolExpr::Not(x) => !eval_bool_with(s, x, bound)?,
        BoolExpr::And(x, y) => eval_bool_with(s, x, bound)? && eval_bool_with(s, y, bound)?,
        BoolExpr::Or(x, y) => eval_bool_with(s, x, bound)? || eval_bool_with(s, y, bound)?,
        BoolExpr::Implies(x, y) => !eval_bool_with(s, x, bound)? || eval_bool_with(s, y, bound)?,
    })
}

/// Truth of an assertion by finite expansion of its index variables. Index
/// values range over `[-(L+4), L+4]` for the longest array length `L`; a
/// range condition that still holds at either end is rejected as unbounded.
pub fn eval_assertion(s: &State, q: &QuantAssertion) -> Result<bool, RunError> {
    let m = s.max_len() + 4;
    let n = q.index_vars.len();
    let mut idx = vec![-m; n];
    loop {
        let bound = |v: &str| q.index_vars.iter().position(|x| x == v).map(|k| idx[k]);
        if eval_bool_with(s, &q.range, &bound)? {
            if idx.iter().any(|v| v.abs() == m) {
                return Err(RunError::UnboundedRange);
            }
            if !eval_bool_with(s, &q.body, &bound)? {
                return Ok(false);
            }
        }
        // odometer
        let mut k = 0;
        loop {
            if k == n {
                return Ok(true);
            }
            idx[k] += 1;
            if idx[k] <= m {
                break;
            }
            idx[k] = -m;
            k += 1;
        }
    }
}

pub fn eval_all(s: &State, qs: &[QuantAssertion]) -> Result<bool, RunError> {
    for q in qs {
        if !eval_assertion(s, q)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Observation hooks called around every loop iteration.
pub trait Observer {
    fn iteration_start(&mut self, _loop_id: usize, _iter: i64, _s: &State) {}
    fn iteration_end(&mut self, _loop_id: usize, _iter: i64, _s: &State) {}
}

impl Observer for () {}

/// Step-bounded interpreter; loops are numbered in source order from 0.
pub struct Machine<'a> {
    loop_ids: HashMap<*const Loop, usize>,
    pub state: State,
    steps: u64,
    pub step_limit: u64,
    observer: &'a mut dyn Observer,
}

impl<'a> Machine<'a> {
    pub fn new(p: &Program, state: State, observer: &'a mut dyn Observer) -> Self {
        let loop_ids = p.loops().into_iter().enumerate().map(|(i, l)| (l as *const Loop, i)).collect();
        Machine { loop_ids, state, steps: 0, step_limit: 1_000_000, observer }
    }

    fn tick(&mut self) -> Result<(), RunError> {
        self.steps += 1;
        if self.steps > self.step_limit {
            Err(RunError::StepLimit)
        } else {
            Ok(())
        }
    }

    pub fn exec(&mut self, s: &Stmt) -> Result<(), RunError> {
        self.tick()?;
        match s {
            Stmt::Skip => Ok(()),
            Stmt::Assign(v, e) => {
                let x = eval_expr(&self.state, e)?;
                self.state.scalars.insert(v.clone(), x);
                Ok(())
            }
            Stmt::Store(a, i, e) => {
                let i = eval_expr(&self.state, i)?;
                let x = eval_expr(&self.state, e)?;
                self.state.write(a, i, x)
            }
            Stmt::Assume(b) => {
                if eval_bool(&self.state, b)? {
                    Ok(())
                } else {
                    Err(RunError::AssumeFailed)
                }
            }
            Stmt::If(c, t, e) => {
                if eval_bool(&self.state, c)? {
                    self.exec(t)
                } else {
                    self.exec(e)
                }
            }
            Stmt::For(l) => {
                let id = self.loop_ids.get(&(l as *const Loop)).copied().unwrap_or(usize::MAX);
                let mut k = 0i64;
                self.state.scalars.insert(l.counter.clone(), 0);
                while k < eval_expr(&self.state, &l.trip)? {
                    self.tick()?;
                    self.observer.iteration_start(id, k, &self.state);
                    self.exec(&l.body)?;
                    self.observer.iteration_end(id, k, &self.state);
                    k += 1;
                    self.state.scalars.insert(l.counter.clone(), k);
                }
                Ok(())
            }
            Stmt::Seq(items) => items.iter().try_for_each(|i| self.exec(i)),
        }
    }
}

/// Run a program body from `state`.
pub fn run(p: &Program, state: State) -> Result<State, RunError> {
    let mut obs = ();
    let mut m = Machine::new(p, state, &mut obs);
    m.exec(&p.body)?;
    Ok(m.state)
}

/// Run by walking the control-flow graph instead of the syntax tree.
pub fn run_cfg(cfg: &Cfg, mut s: State, step_limit: u64) -> Result<State, RunError> {
    let mut n = cfg.start;
    let mut steps = 0;
    while n != cfg.end {
        steps += 1;
        if steps > step_limit {
            return Err(RunError::StepLimit);
        }
        let label = match &cfg.nodes[n] {
            NodeKind::Start | NodeKind::End => Label::U,
            NodeKind::Assign(v, e) => {
                let x = eval_expr(&s, e)?;
                s.scalars.insert(v.clone(), x);
                Label::U
            }
            NodeKind::Store(a, i, e) => {
                let (i, x) = (eval_expr(&s, i)?, eval_expr(&s, e)?);
                s.write(a, i, x)?;
                Label::U
            }
            NodeKind::Assume(b) => {
                if !eval_bool(&s, b)? {
                    return Err(RunError::AssumeFailed);
                }
                Label::U
            }
            NodeKind::Cond(b) => {
                if eval_bool(&s, b)? {
                    Label::Tt
                } else {
                    Label::Ff
                }
            }
            NodeKind::Head { counter, trip } => {
                if s.scalar(counter)? < eval_expr(&s, trip)? {
                    Label::Tt
                } else {
                    Label::Ff
                }
            }
            NodeKind::Init(c) => {
                s.scalars.insert(c.clone(), 0);
                Label::U
            }
            NodeKind::Incr(c) => {
                let v = s.scalar(c)?.checked_add(1).ok_or(RunError::Overflow)?;
                s.scalars.insert(c.clone(), v);
                Label::U
            }
        };
        n = cfg.succs(n).find(|(_, e)| e.label == label).map(|(_, e)| e.dst).expect("well-labelled cfg");
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub array_size: i64,
    pub runs: usize,
    pub seed: u64,
    pub value_range: (i64, i64),
    /// Scalars pinned to a value instead of drawn at random.
    pub fixed: BTreeMap<String, i64>,
    /// Attempts per run before giving up.
    pub retries: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { array_size: 8, runs: 10, seed: 0, value_range: (-10, 10), fixed: BTreeMap::new(), retries: 200 }
    }
}

const MAX_ARRAY_LEN: i64 = 1 << 16;

/// Concrete initial state: size parameters set to `size`, `fixed` scalars
/// pinned, everything else drawn from `value_range`.
pub fn random_state(p: &Program, cfg: &RunConfig, rng: &mut impl Rng) -> Result<State, RunError> {
    let mut s = State::default();
    let sizes = p.size_params();
    let (lo, hi) = cfg.value_range;
    for v in &p.scalars {
        let x = if let Some(x) = cfg.fixed.get(v) {
            *x
        } else if sizes.contains(v) {
            cfg.array_size
        } else {
            rng.gen_range(lo..=hi)
        };
        s.scalars.insert(v.clone(), x);
    }
    for a in &p.arrays {
        let n = eval_expr(&s, &a.size)?;
        if !(0..=MAX_ARRAY_LEN).contains(&n) {
            return Err(RunError::BadSize(a.name.clone()));
        }
        s.arrays.insert(a.name.clone(), (0..n).map(|_| rng.gen_range(lo..=hi)).collect());
    }
    Ok(s)
}

/// What to record at the end of each iteration of one loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObsKind {
    /// `array[index]`, the index evaluated in the iteration's entry state.
    Cell { array: String, index: Expr },
    /// Scalar value at the end of the iteration.
    Scalar(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObsVar {
    pub name: String,
    pub kind: ObsKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopObs {
    pub loop_id: usize,
    /// Cut-point the loop exits to.
    pub cutpoint: CutPoint,
    pub counter: String,
    pub vars: Vec<ObsVar>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceTuple {
    #[serde(serialize_with = "ser_cut")]
    pub cutpoint: CutPoint,
    pub run: usize,
    #[serde(skip)]
    pub loop_id: usize,
    #[serde(skip)]
    pub iteration: i64,
    /// Values by observation name; cells that are out of bounds are absent.
    pub values: BTreeMap<String, i64>,
}

fn ser_cut<S: serde::Serializer>(c: &CutPoint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&c.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no admissible random run after {attempts} attempts (last failure: {last})")]
pub struct MiningUnavailable {
    pub attempts: usize,
    pub last: RunError,
}

struct Recorder<'a> {
    specs: &'a [LoopObs],
    run: usize,
    entry: BTreeMap<usize, State>,
    out: Vec<TraceTuple>,
}

impl Observer for Recorder<'_> {
    fn iteration_start(&mut self, loop_id: usize, _iter: i64, s: &State) {
        if self.specs.iter().any(|o| o.loop_id == loop_id) {
            // array contents are not needed at entry, only scalars
            let snap = State { scalars: s.scalars.clone(), arrays: BTreeMap::new() };
            self.entry.insert(loop_id, snap);
        }
    }

    fn iteration_end(&mut self, loop_id: usize, iter: i64, s: &State) {
        let Some(spec) = self.specs.iter().find(|o| o.loop_id == loop_id) else { return };
        let entry = &self.entry[&loop_id];
        let mut values = BTreeMap::new();
        values.insert(spec.counter.clone(), iter);
        for v in &spec.vars {
            let x = match &v.kind {
                ObsKind::Scalar(n) => s.scalar(n).ok(),
                ObsKind::Cell { array, index } => eval_expr(entry, index).ok().and_then(|i| s.read(array, i).ok()),
            };
            if let Some(x) = x {
                values.insert(v.name.clone(), x);
            }
        }
        self.out.push(TraceTuple { cutpoint: spec.cutpoint, run: self.run, loop_id, iteration: iter, values });
    }
}

fn run_seed(seed: u64, run: usize) -> u64 {
    seed ^ (run as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// One admissible random run: precondition true, no runtime error.
pub fn admissible_run(
    p: &Program,
    cfg: &RunConfig,
    rng: &mut ChaCha8Rng,
    observer: &mut dyn Observer,
) -> Result<(State, State), RunError> {
    let init = random_state(p, cfg, rng)?;
    if !eval_all(&init, &p.pre)? {
        return Err(RunError::PreFalse);
    }
    let mut m = Machine::new(p, init.clone(), observer);
    m.exec(&p.body)?;
    Ok((init, m.state))
}

/// Execute `cfg.runs` random runs and record tuples for the given loops.
/// Output is ordered by (run, tuple) and identical for identical seeds.
pub fn run_random(p: &Program, cfg: &RunConfig, specs: &[LoopObs]) -> Result<Vec<TraceTuple>, MiningUnavailable> {
    let per_run: Vec<Result<Vec<TraceTuple>, MiningUnavailable>> = (0..cfg.runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = ChaCha8Rng::seed_from_u64(run_seed(cfg.seed, run));
            let mut last = RunError::PreFalse;
            for _ in 0..cfg.retries.max(1) {
                let mut rec = Recorder { specs, run, entry: BTreeMap::new(), out: Vec::new() };
                match admissible_run(p, cfg, &mut rng, &mut rec) {
                    Ok(_) => return Ok(rec.out),
                    Err(e) => last = e,
                }
            }
            Err(MiningUnavailable { attempts: cfg.retries.max(1), last })
        })
        .collect();
    let mut out = Vec::new();
    for r in per_run {
        out.extend(r?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;

    #[test]
    fn euclidean_semantics_and_errors() {
        let mut s = State::default();
        s.scalars.insert("x".into(), -7);
        s.arrays.insert("A".into(), vec![1, 2]);
        let p = |t: &str| {
            let q = parse(&format!("int x; int A[2]; ensures {t} == 0;")).unwrap();
            let BoolExpr::Rel(_, e, _) = &q.post[0].body else { panic!() };
            e.clone()
        };
        assert_eq!(eval_expr(&s, &p("x / 2")), Ok(-4));
        assert_eq!(eval_expr(&s, &p("x % 2")), Ok(1));
        assert_eq!(eval_expr(&s, &p("x / 0")), Err(RunError::DivByZero));
        assert!(matches!(eval_expr(&s, &p("A[2]")), Err(RunError::OutOfBounds { .. })));
    }

    #[test]
    fn finite_expansion() {
        let p = parse("int N; int A[N]; ensures forall j :: 0 <= j && j < N ==> A[j] >= 0;").unwrap();
        let mut s = State::default();
        s.scalars.insert("N".into(), 3);
        s.arrays.insert("A".into(), vec![0, 1, 2]);
        assert_eq!(eval_assertion(&s, &p.post[0]), Ok(true));
        s.arrays.get_mut("A").unwrap()[1] = -1;
        assert_eq!(eval_assertion(&s, &p.post[0]), Ok(false));
        let vac = parse("int N; int A[N]; ensures forall j :: false ==> A[j] >= 0;").unwrap();
        assert_eq!(eval_assertion(&s, &vac.post[0]), Ok(true));
        let open = parse("int N; int A[N]; ensures forall j :: j < N ==> A[j] >= -5;").unwrap();
        assert!(eval_assertion(&s, &open.post[0]).is_err());
    }
}
