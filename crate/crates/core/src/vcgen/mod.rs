// SPDX-License-Identifier: Apache-2.0

//! Proof obligations as solver tasks.

pub mod bmc;
pub mod symex;

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

use crate::affine::{simplify, Affine};
use crate::cfg::CutPoint;
use crate::frontend::ast::{BinOp, BoolExpr, Expr, Loop, Program, QuantAssertion, RelOp, Stmt};
use crate::smt::{
    declare_free_ints, plain_bool, Expectation, Fresh, Model, Outcome, Script, Session, Sort, Status, Term,
};
use crate::tiler::{build_tile, collect_read_exprs, find_heuristic_tile, strict_queries, Tile, TileError, PATH_LIMIT};

pub use symex::{paths, Access, Path, SymState, Symex, SymexError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TaskKind {
    T1,
    T2Star,
    T3Star,
    T2DStar,
    BmcCex,
    Tightness,
    Strict,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::T1 => "T1",
            TaskKind::T2Star => "T2STAR",
            TaskKind::T3Star => "T3STAR",
            TaskKind::T2DStar => "T2DSTAR",
            TaskKind::BmcCex => "BMC_CEX",
            TaskKind::Tightness => "TIGHTNESS",
            TaskKind::Strict => "STRICT",
        }
    }
}

impl Serialize for TaskKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// Where an assertion at a cut-point comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Origin {
    Pre(usize),
    Post(usize),
    Candidate(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conjunct {
    pub origin: Origin,
    pub assertion: QuantAssertion,
}

#[derive(Debug, Clone)]
pub enum Payload {
    Query { script: Script, fallback: Option<Script> },
    /// Could not be encoded; resolves to unknown.
    Unsupported(String),
}

#[derive(Debug, Clone)]
pub struct CheckTask {
    pub kind: TaskKind,
    pub segment: String,
    pub array: Option<String>,
    /// Assertion this task proves, for blaming candidates.
    pub goal: Option<Origin>,
    /// Strict and tightness tasks do not gate the verdict.
    pub advisory: bool,
    pub payload: Payload,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskStatus {
    Pass,
    Fail,
    Unknown,
    Timeout,
}

#[derive(Debug, Clone)]
pub struct TaskResult {
    pub kind: TaskKind,
    pub segment: String,
    pub array: Option<String>,
    pub goal: Option<Origin>,
    pub advisory: bool,
    pub status: TaskStatus,
    pub time: Duration,
    pub model: Option<Model>,
    pub detail: String,
}

/// Run one task; a quantified query that comes back unknown is retried in
/// its quantifier-free fallback form.
pub fn discharge(task: &CheckTask, session: &Session) -> TaskResult {
    let mut res = TaskResult {
        kind: task.kind,
        segment: task.segment.clone(),
        array: task.array.clone(),
        goal: task.goal,
        advisory: task.advisory,
        status: TaskStatus::Unknown,
        time: Duration::ZERO,
        model: None,
        detail: String::new(),
    };
    let (script, fallback) = match &task.payload {
        Payload::Unsupported(why) => {
            res.detail = why.clone();
            return res;
        }
        Payload::Query { script, fallback } => (script, fallback),
    };
    let run = |s: &Script, res: &mut TaskResult| {
        let r = session.check(task.kind.name(), &task.segment, s);
        res.time += r.time;
        res.detail = r.detail.clone();
        res.model = r.model.clone();
        res.status = match (r.status, Outcome::of(r.status, s.expect)) {
            (Status::Timeout, _) => TaskStatus::Timeout,
            (_, Outcome::Pass) => TaskStatus::Pass,
            (_, Outcome::Fail) => TaskStatus::Fail,
            (_, Outcome::Unknown) => TaskStatus::Unknown,
        };
    };
    run(script, &mut res);
    if let (TaskStatus::Unknown | TaskStatus::Timeout, Some(fb)) = (res.status, fallback) {
        let first = res.status;
        run(fb, &mut res);
        // the fallback can only confirm
        if res.status != TaskStatus::Pass {
            res.status = first;
            res.model = None;
        }
    }
    res
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShapeError {
    #[error("nested loops are not supported")]
    Nested,
    #[error("loops below the top level are not supported")]
    NotTopLevel,
}

/// `S0; L1; S1; ...; Ln; Sn` with loop-free `Sk`.
#[derive(Debug, Clone)]
pub struct Shape {
    pub straight: Vec<Stmt>,
    pub loops: Vec<Loop>,
}

impl Shape {
    pub fn of(p: &Program) -> Result<Shape, ShapeError> {
        let items: Vec<&Stmt> = match &p.body {
            Stmt::Seq(items) => items.iter().collect(),
            s => vec![s],
        };
        let mut straight = vec![Vec::new()];
        let mut loops = Vec::new();
        for s in items {
            match s {
                Stmt::For(l) => {
                    if l.body.has_loop() {
                        return Err(ShapeError::Nested);
                    }
                    loops.push(l.clone());
                    straight.push(Vec::new());
                }
                s if s.has_loop() => return Err(ShapeError::NotTopLevel),
                s => straight.last_mut().unwrap().push(s.clone()),
            }
        }
        Ok(Shape { straight: straight.into_iter().map(Stmt::seq).collect(), loops })
    }

    /// Cut-point before straight piece `k`.
    pub fn piece_source(&self, k: usize) -> CutPoint {
        if k == 0 {
            CutPoint::Start
        } else {
            CutPoint::Head(k)
        }
    }

    /// Cut-point after straight piece `k`.
    pub fn piece_sink(&self, k: usize) -> CutPoint {
        if k == self.loops.len() {
            CutPoint::End
        } else {
            CutPoint::Head(k + 1)
        }
    }

    pub fn piece_id(&self, k: usize) -> String {
        format!("{}-{}", self.piece_source(k), self.piece_sink(k))
    }

    pub fn loop_id(&self, k: usize) -> String {
        let h = CutPoint::Head(k + 1);
        format!("{h}-{h}")
    }
}

/// Tiles computed once per run: per loop, tiles of the updated arrays and
/// read-based tiles for arrays the loop only reads.
#[derive(Debug, Clone, Default)]
pub struct Tiles {
    pub updated: Vec<BTreeMap<String, Result<Tile, TileError>>>,
    pub read: Vec<BTreeMap<String, Result<Tile, TileError>>>,
}

impl Tiles {
    pub fn compute(shape: &Shape, session: &Session) -> Tiles {
        let mut t = Tiles::default();
        for (k, lp) in shape.loops.iter().enumerate() {
            let seg = shape.loop_id(k);
            let updated = find_heuristic_tile(lp, session, &seg);
            let mut read = BTreeMap::new();
            for (a, exprs) in collect_read_exprs(&lp.body) {
                if !updated.contains_key(&a) {
                    read.insert(a.clone(), build_tile(&a, lp, exprs, session, &seg));
                }
            }
            t.updated.push(updated);
            t.read.push(read);
        }
        t
    }

    /// Tile for a quantified goal of loop `k`: the common tile of the
    /// updated arrays the goal mentions, else a read-based tile.
    pub fn for_goal(&self, k: usize, arrays: &BTreeSet<String>) -> Result<&Tile, String> {
        let mut chosen: Option<&Tile> = None;
        for a in arrays {
            match self.updated[k].get(a) {
                None => continue,
                Some(Err(e)) => return Err(format!("no tile for {a}: {e}")),
                Some(Ok(t)) => match chosen {
                    Some(c) if sorted(&c.exprs) != sorted(&t.exprs) => {
                        return Err(format!("tiles of {} and {a} differ", c.array))
                    }
                    Some(_) => {}
                    None => chosen = Some(t),
                },
            }
        }
        if let Some(t) = chosen {
            return Ok(t);
        }
        for a in arrays {
            if let Some(r) = self.read[k].get(a) {
                return r.as_ref().map_err(|e| format!("no tile for {a}: {e}"));
            }
        }
        Err("the loop accesses no array of the assertion".into())
    }
}

fn sorted(v: &[Expr]) -> Vec<Expr> {
    let mut v = v.to_vec();
    v.sort();
    v
}

/// Everything the encoders need besides the assertions.
pub struct Ctx<'a> {
    pub program: &'a Program,
    pub shape: &'a Shape,
    pub tiles: &'a Tiles,
    pub strict: bool,
}

const BOUND_L: &str = "#l";
const BOUND_J: &str = "#j";

fn binds(pairs: &[(&str, &Term)]) -> BTreeMap<String, Term> {
    pairs.iter().map(|(k, v)| (k.to_string(), (*v).clone())).collect()
}

fn tile_at(tile: &Tile, st: &SymState, l: &Term, j: &Term) -> Term {
    let b = tile.at(&Expr::var(BOUND_L), &Expr::var(BOUND_J));
    st.bool_with(&b, &binds(&[(BOUND_L, l), (BOUND_J, j)]))
}

/// Iteration numbers that may own index `j`, one per tile expression plus
/// one for the closed form; each is exact for the indices it targets.
fn tile_witnesses(tile: &Tile) -> Vec<Expr> {
    let j = Expr::var(BOUND_J);
    let mut out = Vec::new();
    let mut push = |e: &Expr, span: i64| {
        let Some((a, rest)) = Affine::from_expr(e).split_var(&tile.counter) else { return };
        let b = rest.to_expr();
        let w = if a > 0 {
            Expr::bin(BinOp::Div, Expr::sub(j.clone(), b), Expr::Const(a))
        } else if a < 0 {
            // ceil((b - j) / |a|) covers a block of width `span` below b
            let c = -a;
            let shift = if span > 1 { c - 1 } else { 0 };
            Expr::bin(BinOp::Div, Expr::add(Expr::sub(b, j.clone()), Expr::Const(shift)), Expr::Const(c))
        } else {
            return;
        };
        let w = simplify(&w);
        if !out.contains(&w) {
            out.push(w);
        }
    };
    if let Some((lo, hi)) = &tile.closed {
        let span = Affine::from_expr(&Expr::sub(hi.clone(), lo.clone())).as_constant().unwrap_or(1);
        push(lo, span);
    }
    for e in &tile.exprs {
        push(e, 1);
    }
    out
}

fn in_bounds(p: &Program, st: &SymState, array: &str, j: &Term) -> Term {
    match p.array(array) {
        Some(a) => Term::and([Term::le(Term::Int(0), j.clone()), Term::lt(j.clone(), st.expr(&a.size))]),
        None => Term::Bool(true),
    }
}

/// Range conjuncts mentioning `written` scalars move into the body, so the
/// range stays fixed while the loop runs.
pub fn split_range(q: &QuantAssertion, written: &BTreeSet<String>) -> QuantAssertion {
    fn flat(b: &BoolExpr, out: &mut Vec<BoolExpr>) {
        match b {
            BoolExpr::And(x, y) => {
                flat(x, out);
                flat(y, out);
            }
            BoolExpr::True => {}
            b => out.push(b.clone()),
        }
    }
    let mut parts = Vec::new();
    flat(&q.range, &mut parts);
    let (moved, kept): (Vec<BoolExpr>, Vec<BoolExpr>) = parts.into_iter().partition(|c| {
        let mut v = BTreeSet::new();
        c.scalars(&mut v);
        !v.is_disjoint(written)
    });
    if moved.is_empty() {
        return q.clone();
    }
    let body = BoolExpr::Implies(Box::new(BoolExpr::conj(moved)), Box::new(q.body.clone()));
    QuantAssertion::new(q.index_vars.clone(), BoolExpr::conj(kept), body)
}

fn mentions(q: &QuantAssertion, scalars: &BTreeSet<String>, arrays: &BTreeSet<String>) -> bool {
    !q.free_scalars().is_disjoint(scalars) || !q.arrays().is_disjoint(arrays)
}

/// Instances of `q` in state `st` at every tuple of `points`.
fn instances(q: &QuantAssertion, st: &SymState, points: &[Term]) -> Vec<Term> {
    if !q.is_quantified() {
        return vec![st.bool(&q.body)];
    }
    let n = q.index_vars.len();
    let total = points.len().checked_pow(n as u32).unwrap_or(usize::MAX);
    let mut out = Vec::new();
    if total > 4096 {
        // diagonal only
        for p in points {
            out.push(at(q, st, &vec![p.clone(); n]));
        }
        return out;
    }
    for k in 0..total {
        let mut idx = k;
        let tuple: Vec<Term> = (0..n)
            .map(|_| {
                let t = points[idx % points.len()].clone();
                idx /= points.len();
                t
            })
            .collect();
        out.push(at(q, st, &tuple));
    }
    out
}

/// `range(at) => body(at)`.
fn at(q: &QuantAssertion, st: &SymState, at: &[Term]) -> Term {
    let b: BTreeMap<String, Term> = q.index_vars.iter().cloned().zip(at.iter().cloned()).collect();
    Term::implies(st.bool_with(&q.range, &b), st.bool_with(&q.body, &b))
}

fn range_at(q: &QuantAssertion, st: &SymState, at: &[Term]) -> Term {
    let b: BTreeMap<String, Term> = q.index_vars.iter().cloned().zip(at.iter().cloned()).collect();
    st.bool_with(&q.range, &b)
}

fn body_at(q: &QuantAssertion, st: &SymState, at: &[Term]) -> Term {
    let b: BTreeMap<String, Term> = q.index_vars.iter().cloned().zip(at.iter().cloned()).collect();
    st.bool_with(&q.body, &b)
}

/// Index terms of the array reads in `q` at `at`.
fn read_points(q: &QuantAssertion, st: &SymState, at: &[Term]) -> Vec<Term> {
    let b: BTreeMap<String, Term> = q.index_vars.iter().cloned().zip(at.iter().cloned()).collect();
    let mut reads = Vec::new();
    q.range.reads(&mut reads);
    q.body.reads(&mut reads);
    reads.iter().map(|(_, i)| st.expr_with(i, &b)).collect()
}

fn push_unique(v: &mut Vec<Term>, items: impl IntoIterator<Item = Term>) {
    for t in items {
        if !v.contains(&t) {
            v.push(t);
        }
    }
}

/// Script under construction with the program's declarations.
struct Builder {
    script: Script,
    fresh: Fresh,
}

impl Builder {
    fn new(ctx: &Ctx) -> Self {
        let mut script = Script::new(Expectation::UnsatMeansPass);
        for (n, s) in SymState::declarations(ctx.program) {
            script.declare(n, s);
        }
        let mut b = Builder { script, fresh: Fresh::new() };
        let st = SymState::entry(ctx.program);
        for a in ctx.program.global_assumptions().iter().chain(&ctx.program.size_assumptions()) {
            b.assume(st.bool(a));
        }
        b
    }

    fn int(&mut self, base: &str) -> Term {
        Term::var(self.fresh.name(base))
    }

    fn assume(&mut self, t: Term) {
        self.script.assert(t);
    }

    fn finish(mut self) -> Script {
        declare_free_ints(&mut self.script);
        self.script
    }
}

fn query(script: Script) -> Payload {
    Payload::Query { script, fallback: None }
}

fn task(kind: TaskKind, segment: String, array: Option<String>, goal: Option<Origin>, payload: Payload) -> CheckTask {
    CheckTask { kind, segment, array, goal, advisory: false, payload }
}

/// `{hyps} s {goal}` for a loop-free `s`, hypotheses instantiated at the
/// body's access indices and at the goal's skolem and read indices.
pub fn encode_triple(ctx: &Ctx, hyps: &[Conjunct], s: &Stmt, goal: &QuantAssertion) -> Result<Script, SymexError> {
    let mut b = Builder::new(ctx);
    let st0 = SymState::entry(ctx.program);
    let mut sx = Symex::new();
    let st1 = sx.exec(s, st0.clone(), &Term::Bool(true))?;
    let sk: Vec<Term> = goal.index_vars.iter().map(|_| b.int("sk")).collect();
    let mut points = sx.index_terms(false);
    push_unique(&mut points, sk.iter().cloned());
    push_unique(&mut points, read_points(goal, &st1, &sk));
    for h in hyps {
        for t in instances(&h.assertion, &st0, &points) {
            b.assume(t);
        }
    }
    for t in sx.assumptions {
        b.assume(t);
    }
    if goal.is_quantified() {
        b.assume(range_at(goal, &st1, &sk));
        b.assume(Term::not(body_at(goal, &st1, &sk)));
    } else {
        b.assume(Term::not(st1.bool(&goal.body)));
    }
    Ok(b.finish())
}

pub fn encode_t2dstar(ctx: &Ctx, seg: &str, hyps: &[Conjunct], s: &Stmt, goal: &Conjunct) -> CheckTask {
    let payload = match encode_triple(ctx, hyps, s, &goal.assertion) {
        Ok(sc) => query(sc),
        Err(e) => Payload::Unsupported(e.to_string()),
    };
    task(TaskKind::T2DStar, seg.to_string(), None, Some(goal.origin), payload)
}

/// T1: every index in the range and in bounds lies in some tile, and every
/// tile index is in bounds. The fallback replaces the inner quantifier by
/// witness iterations.
pub fn encode_t1(ctx: &Ctx, lp: &Loop, tile: &Tile, goal: &QuantAssertion) -> Payload {
    let st = SymState::entry(ctx.program);
    let build = |witness: bool| {
        let mut b = Builder::new(ctx);
        let e = st.expr(&lp.trip);
        let j0 = b.int("j");
        let covered = if witness {
            let ws: Vec<Term> = tile_witnesses(tile)
                .iter()
                .map(|w| st.expr_with(w, &binds(&[(BOUND_J, &j0)])))
                .collect();
            Term::or(ws.iter().map(|w| {
                Term::and([Term::le(Term::Int(0), w.clone()), Term::lt(w.clone(), e.clone()), tile_at(tile, &st, w, &j0)])
            }))
        } else {
            let l = Term::var("l!q");
            Term::exists(
                vec![("l!q".into(), Sort::Int)],
                Term::and([Term::le(Term::Int(0), l.clone()), Term::lt(l.clone(), e.clone()), tile_at(tile, &st, &l, &j0)]),
            )
        };
        let not_eta1 = Term::and([
            range_at(goal, &st, std::slice::from_ref(&j0)),
            Term::not(Term::and([in_bounds(ctx.program, &st, &tile.array, &j0), covered])),
        ]);
        let (l1, j1) = (b.int("l"), b.int("j"));
        let not_eta2 = Term::and([
            Term::le(Term::Int(0), l1.clone()),
            Term::lt(l1.clone(), e.clone()),
            tile_at(tile, &st, &l1, &j1),
            Term::not(in_bounds(ctx.program, &st, &tile.array, &j1)),
        ]);
        b.assume(Term::or([not_eta1, not_eta2]));
        b.finish()
    };
    let witnesses = !tile_witnesses(tile).is_empty();
    Payload::Query { script: build(false), fallback: witnesses.then(|| build(true)) }
}

/// Earlier tiles' slices at the body's read indices, as in T2*.
fn zeta(b: &mut Builder, st0: &SymState, tile: &Tile, goal: &QuantAssertion, l: &Term, e: &Term, reads: &[Term]) -> Vec<Term> {
    let ws = tile_witnesses(tile);
    let mut out = Vec::new();
    for r in reads {
        let slice = |lk: &Term| {
            Term::implies(
                Term::and([
                    Term::le(Term::Int(0), lk.clone()),
                    Term::lt(lk.clone(), l.clone()),
                    Term::lt(l.clone(), e.clone()),
                    tile_at(tile, st0, lk, r),
                    range_at(goal, st0, std::slice::from_ref(r)),
                ]),
                body_at(goal, st0, std::slice::from_ref(r)),
            )
        };
        if ws.is_empty() {
            let name = b.fresh.name("lk");
            let lk = Term::var(name.clone());
            out.push(Term::forall(vec![(name, Sort::Int)], slice(&lk)));
        } else {
            for w in &ws {
                out.push(slice(&st0.expr_with(w, &binds(&[(BOUND_J, r)]))));
            }
        }
    }
    out
}

fn single_index(goal: &QuantAssertion) -> Result<(), String> {
    if goal.index_vars.len() == 1 {
        Ok(())
    } else {
        Err("assertions over several index variables are not tiled".into())
    }
}

/// T2*: iteration `l` establishes its slice, given the frame invariant and
/// earlier slices.
pub fn encode_t2star(ctx: &Ctx, lp: &Loop, tile: &Tile, inv: &[Conjunct], goal: &QuantAssertion) -> Payload {
    if let Err(e) = single_index(goal) {
        return Payload::Unsupported(e);
    }
    let mut b = Builder::new(ctx);
    let st0 = SymState::entry(ctx.program);
    let l = st0.scalar(&lp.counter);
    let e = st0.expr(&lp.trip);
    let mut sx = Symex::new();
    let st1 = match sx.exec(&lp.body, st0.clone(), &Term::Bool(true)) {
        Ok(s) => s,
        Err(err) => return Payload::Unsupported(err.to_string()),
    };
    let j = b.int("j");
    let reads = sx.index_terms(true);
    let mut points = sx.index_terms(false);
    push_unique(&mut points, [j.clone()]);
    push_unique(&mut points, read_points(goal, &st1, std::slice::from_ref(&j)));
    b.assume(Term::le(Term::Int(0), l.clone()));
    b.assume(Term::lt(l.clone(), e.clone()));
    for h in inv {
        for t in instances(&h.assertion, &st0, &points) {
            b.assume(t);
        }
    }
    for z in zeta(&mut b, &st0, tile, goal, &l, &e, &reads) {
        b.assume(z);
    }
    b.assume(tile_at(tile, &st0, &l, &j));
    b.assume(range_at(goal, &st0, std::slice::from_ref(&j)));
    for t in sx.assumptions {
        b.assume(t);
    }
    b.assume(Term::not(body_at(goal, &st1, std::slice::from_ref(&j))));
    query(b.finish())
}

/// T3*: iteration `l` keeps every earlier slice.
pub fn encode_t3star(ctx: &Ctx, lp: &Loop, tile: &Tile, inv: &[Conjunct], goal: &QuantAssertion) -> Payload {
    if let Err(e) = single_index(goal) {
        return Payload::Unsupported(e);
    }
    let mut b = Builder::new(ctx);
    let st0 = SymState::entry(ctx.program);
    let l = st0.scalar(&lp.counter);
    let e = st0.expr(&lp.trip);
    let mut sx = Symex::new();
    let st1 = match sx.exec(&lp.body, st0.clone(), &Term::Bool(true)) {
        Ok(s) => s,
        Err(err) => return Payload::Unsupported(err.to_string()),
    };
    let (l1, j1) = (b.int("lp"), b.int("jp"));
    let mut points = sx.index_terms(false);
    push_unique(&mut points, [j1.clone()]);
    push_unique(&mut points, read_points(goal, &st0, std::slice::from_ref(&j1)));
    push_unique(&mut points, read_points(goal, &st1, std::slice::from_ref(&j1)));
    b.assume(Term::le(Term::Int(0), l1.clone()));
    b.assume(Term::lt(l1.clone(), l.clone()));
    b.assume(Term::lt(l.clone(), e));
    for h in inv {
        for t in instances(&h.assertion, &st0, &points) {
            b.assume(t);
        }
    }
    b.assume(tile_at(tile, &st0, &l1, &j1));
    b.assume(range_at(goal, &st0, std::slice::from_ref(&j1)));
    b.assume(body_at(goal, &st0, std::slice::from_ref(&j1)));
    for t in sx.assumptions {
        b.assume(t);
    }
    b.assume(Term::not(body_at(goal, &st1, std::slice::from_ref(&j1))));
    query(b.finish())
}

/// A quantifier-free fact holds after every iteration: the first one
/// establishes it and later ones preserve it.
pub fn encode_establish(ctx: &Ctx, lp: &Loop, inv: &[Conjunct], goal: &QuantAssertion) -> Payload {
    let mut b = Builder::new(ctx);
    let st0 = SymState::entry(ctx.program);
    let l = st0.scalar(&lp.counter);
    let mut sx = Symex::new();
    let st1 = match sx.exec(&lp.body, st0.clone(), &Term::Bool(true)) {
        Ok(s) => s,
        Err(err) => return Payload::Unsupported(err.to_string()),
    };
    let mut points = sx.index_terms(false);
    push_unique(&mut points, read_points(goal, &st1, &[]));
    b.assume(Term::le(Term::Int(0), l.clone()));
    b.assume(Term::lt(l.clone(), st0.expr(&lp.trip)));
    b.assume(Term::implies(Term::lt(Term::Int(0), l), st0.bool(&goal.body)));
    for h in inv {
        for t in instances(&h.assertion, &st0, &points) {
            b.assume(t);
        }
    }
    for t in sx.assumptions {
        b.assume(t);
    }
    b.assume(Term::not(st1.bool(&goal.body)));
    query(b.finish())
}

/// The goal holds when the loop does not run at all.
pub fn encode_zero_trip(ctx: &Ctx, lp: &Loop, hyps: &[Conjunct], goal: &QuantAssertion) -> Payload {
    let guard = Stmt::Assume(BoolExpr::rel(RelOp::Le, lp.trip.clone(), Expr::Const(0)));
    match encode_triple(ctx, hyps, &guard, goal) {
        Ok(s) => query(s),
        Err(e) => Payload::Unsupported(e.to_string()),
    }
}

/// Some path of iteration `l` leaves an index of its tile unwritten.
pub fn encode_tightness(ctx: &Ctx, lp: &Loop, tile: &Tile, inv: &[Conjunct]) -> Payload {
    let mut b = Builder::new(ctx);
    let st0 = SymState::entry(ctx.program);
    let ps = match paths(&lp.body, st0.clone(), PATH_LIMIT) {
        Ok(ps) => ps,
        Err(e) => return Payload::Unsupported(e.to_string()),
    };
    let l = st0.scalar(&lp.counter);
    let j = b.int("j");
    b.assume(Term::le(Term::Int(0), l.clone()));
    b.assume(Term::lt(l.clone(), st0.expr(&lp.trip)));
    for h in inv {
        for t in instances(&h.assertion, &st0, std::slice::from_ref(&j)) {
            b.assume(t);
        }
    }
    b.assume(tile_at(tile, &st0, &l, &j));
    let missed = ps.iter().map(|p| {
        let mut parts = p.pc.clone();
        for (a, w) in &p.stores {
            if *a == tile.array {
                parts.push(Term::not(Term::eq(j.clone(), w.clone())));
            }
        }
        Term::and(parts)
    });
    b.assume(Term::or(missed));
    query(b.finish())
}

pub fn encode_strict(ctx: &Ctx, tile: &Tile) -> [Payload; 3] {
    strict_queries(tile, &tile.trip).map(|q| {
        let mut b = Builder::new(ctx);
        b.assume(plain_bool(&q));
        query(b.finish())
    })
}

/// Obligations of one round for the given assertions at each cut-point.
pub fn obligations(ctx: &Ctx, at: &BTreeMap<CutPoint, Vec<Conjunct>>) -> Vec<CheckTask> {
    let shape = ctx.shape;
    let empty = Vec::new();
    let get = |c: CutPoint| at.get(&c).unwrap_or(&empty);
    let mut tasks = Vec::new();
    let mut hyps: Vec<Conjunct> = get(CutPoint::Start).clone();
    for k in 0..=shape.loops.len() {
        let seg = shape.piece_id(k);
        for g in get(shape.piece_sink(k)) {
            tasks.push(encode_t2dstar(ctx, &seg, &hyps, &shape.straight[k], g));
        }
        let Some(lp) = shape.loops.get(k) else { break };
        let seg = shape.loop_id(k);
        let head = get(CutPoint::Head(k + 1));
        let (mut ws, mut wa) = (BTreeSet::new(), BTreeSet::new());
        lp.body.write_set(&mut ws, &mut wa);
        ws.insert(lp.counter.clone());
        let (mut after_s, mut after_a) = (BTreeSet::new(), BTreeSet::new());
        shape.straight[k + 1].write_set(&mut after_s, &mut after_a);
        let inv: Vec<Conjunct> = head.iter().filter(|c| !mentions(&c.assertion, &ws, &wa)).cloned().collect();
        let ex: Vec<Conjunct> = get(shape.piece_sink(k + 1))
            .iter()
            .filter(|c| mentions(&c.assertion, &ws, &wa) && !mentions(&c.assertion, &after_s, &after_a))
            .cloned()
            .collect();
        let mut used_tiles: Vec<&Tile> = Vec::new();
        for g in &ex {
            let q = split_range(&g.assertion, &ws);
            tasks.push(task(TaskKind::T2DStar, seg.clone(), None, Some(g.origin), encode_zero_trip(ctx, lp, head, &q)));
            if !q.is_quantified() {
                tasks.push(task(TaskKind::T2Star, seg.clone(), None, Some(g.origin), encode_establish(ctx, lp, &inv, &q)));
                continue;
            }
            match ctx.tiles.for_goal(k, &q.arrays()) {
                Err(why) => {
                    tasks.push(task(TaskKind::T1, seg.clone(), None, Some(g.origin), Payload::Unsupported(why)));
                }
                Ok(tile) => {
                    let arr = Some(tile.array.clone());
                    tasks.push(task(TaskKind::T1, seg.clone(), arr.clone(), Some(g.origin), encode_t1(ctx, lp, tile, &q)));
                    let t2 = encode_t2star(ctx, lp, tile, &inv, &q);
                    tasks.push(task(TaskKind::T2Star, seg.clone(), arr.clone(), Some(g.origin), t2));
                    let t3 = encode_t3star(ctx, lp, tile, &inv, &q);
                    tasks.push(task(TaskKind::T3Star, seg.clone(), arr, Some(g.origin), t3));
                    if !used_tiles.iter().any(|t| std::ptr::eq(*t, tile)) {
                        used_tiles.push(tile);
                    }
                }
            }
        }
        if ctx.strict {
            for tile in used_tiles {
                let arr = Some(tile.array.clone());
                for p in encode_strict(ctx, tile) {
                    let mut t = task(TaskKind::Strict, seg.clone(), arr.clone(), None, p);
                    t.advisory = true;
                    tasks.push(t);
                }
                let mut t = task(TaskKind::Tightness, seg.clone(), arr, None, encode_tightness(ctx, lp, tile, &inv));
                t.advisory = true;
                tasks.push(t);
            }
        }
        hyps = inv;
        hyps.extend(ex);
    }
    tasks
}
