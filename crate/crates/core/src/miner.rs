// SPDX-License-Identifier: Apache-2.0

//! Linear candidate invariants over trace tuples, lifted to quantified
//! mid-conditions at the cut-point following each loop.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::affine::{simplify, Affine};
use crate::cfg::CutPoint;
use crate::exec::{LoopObs, ObsKind, ObsVar, TraceTuple};
use crate::frontend::ast::{BinOp, BoolExpr, Expr, Program, QuantAssertion, RelOp, Stmt};
use crate::tiler::{collect_read_exprs, collect_update_exprs};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MinerConfig {
    pub min_support: usize,
    pub max_const: i64,
}

impl Default for MinerConfig {
    fn default() -> Self {
        MinerConfig { min_support: 10, max_const: 8 }
    }
}

/// Observations per loop: `X[e]` for every update index expression `e` and
/// every array `X` the loop accesses, plus the scalars the loop assigns
/// other than its counter and source variable.
pub fn observation_specs(p: &Program) -> Vec<LoopObs> {
    let loops = p.loops();
    let mut out = Vec::new();
    let top: Vec<&Stmt> = match &p.body {
        Stmt::Seq(items) => items.iter().collect(),
        s => vec![s],
    };
    // successor cut-point of each top-level loop
    let mut succ = BTreeMap::new();
    let mut top_ids = Vec::new();
    for s in &top {
        if let Stmt::For(l) = s {
            top_ids.push(loops.iter().position(|x| std::ptr::eq(*x, l)).unwrap());
        }
    }
    for (k, id) in top_ids.iter().enumerate() {
        let cp = top_ids.get(k + 1).map_or(CutPoint::End, |n| CutPoint::Head(n + 1));
        succ.insert(*id, cp);
    }
    for (id, lp) in loops.iter().enumerate() {
        let Some(cut) = succ.get(&id).copied() else { continue };
        let Ok(updates) = collect_update_exprs(&lp.body) else { continue };
        let mut accessed = BTreeSet::new();
        let mut written = BTreeSet::new();
        lp.body.write_set(&mut written, &mut accessed);
        accessed.extend(collect_read_exprs(&lp.body).into_keys());
        let mut groups: Vec<Expr> = Vec::new();
        for exprs in updates.per_array.values() {
            for e in exprs {
                if !groups.contains(e) {
                    groups.push(e.clone());
                }
            }
        }
        let mut vars = Vec::new();
        for g in &groups {
            for a in &accessed {
                vars.push(ObsVar { name: format!("{a}[{g}]"), kind: ObsKind::Cell { array: a.clone(), index: g.clone() } });
            }
        }
        let source = lp.source.as_ref().map(|s| s.var.clone());
        for v in &written {
            if *v != lp.counter && Some(v) != source.as_ref() && !p.counters.contains(v) {
                vars.push(ObsVar { name: v.clone(), kind: ObsKind::Scalar(v.clone()) });
            }
        }
        out.push(LoopObs { loop_id: id, cutpoint: cut, counter: lp.counter.clone(), vars });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Relation {
    /// `v1 = v2 + c`
    Eq(String, String, i64),
    /// `v1 <= v2 + c`
    Le(String, String, i64),
    /// `v = c`
    Const(String, i64),
    /// `v1 != v2`
    Ne(String, String),
}

impl Relation {
    fn vars(&self) -> Vec<&str> {
        match self {
            Relation::Eq(a, b, _) | Relation::Le(a, b, _) | Relation::Ne(a, b) => vec![a, b],
            Relation::Const(a, _) => vec![a],
        }
    }

    /// Truth on one tuple; `None` when a variable was not observed.
    pub fn eval(&self, t: &TraceTuple) -> Option<bool> {
        let g = |v: &str| t.values.get(v).copied();
        Some(match self {
            Relation::Eq(a, b, c) => g(a)? as i128 == g(b)? as i128 + *c as i128,
            Relation::Le(a, b, c) => (g(a)? as i128) <= g(b)? as i128 + *c as i128,
            Relation::Const(a, c) => g(a)? == *c,
            Relation::Ne(a, b) => g(a)? != g(b)?,
        })
    }

    pub fn template(&self) -> &'static str {
        match self {
            Relation::Eq(..) => "v1 = v2 + c",
            Relation::Le(..) => "v1 <= v2 + c",
            Relation::Const(..) => "v1 = c",
            Relation::Ne(..) => "v1 != v2",
        }
    }

    fn to_bool(&self, term: &dyn Fn(&str) -> Expr) -> BoolExpr {
        let plus = |e: Expr, c: i64| simplify(&Expr::add(e, Expr::Const(c)));
        match self {
            Relation::Eq(a, b, c) => BoolExpr::rel(RelOp::Eq, term(a), plus(term(b), *c)),
            Relation::Le(a, b, c) => BoolExpr::rel(RelOp::Le, term(a), plus(term(b), *c)),
            Relation::Const(a, c) => BoolExpr::rel(RelOp::Eq, term(a), Expr::Const(*c)),
            Relation::Ne(a, b) => BoolExpr::rel(RelOp::Ne, term(a), term(b)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CandStatus {
    Untried,
    Proven,
    Dropped,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub cutpoint: CutPoint,
    pub loop_id: usize,
    pub relation: Relation,
    pub assertion: QuantAssertion,
    pub support: usize,
    pub status: CandStatus,
}

impl Candidate {
    pub fn provenance(&self) -> String {
        format!("{} [{}], support {}", self.relation.template(), relation_text(&self.relation), self.support)
    }
}

fn relation_text(r: &Relation) -> String {
    r.to_bool(&|v| Expr::var(v.to_string())).to_string()
}

#[derive(Default)]
struct Stats {
    n: usize,
    min_diff: i128,
    max_diff: i128,
    ever_equal: bool,
}

/// Mine one loop's tuples. Deterministic in the order of `spec.vars`.
fn mine_loop(spec: &LoopObs, tuples: &[&TraceTuple], cfg: &MinerConfig) -> Vec<(Relation, usize)> {
    let present = |v: &ObsVar| tuples.iter().filter(|t| t.values.contains_key(&v.name)).count();
    let vars: Vec<&ObsVar> = spec.vars.iter().filter(|v| present(v) >= cfg.min_support).collect();
    let group = |v: &ObsVar| match &v.kind {
        ObsKind::Cell { index, .. } => Some(index.clone()),
        ObsKind::Scalar(_) => None,
    };
    let mut out = Vec::new();
    // constants
    let mut constant = BTreeSet::new();
    for v in &vars {
        let vals: BTreeSet<i64> = tuples.iter().filter_map(|t| t.values.get(&v.name).copied()).collect();
        if vals.len() == 1 {
            let c = *vals.iter().next().unwrap();
            if c.abs() <= cfg.max_const {
                out.push((Relation::Const(v.name.clone(), c), present(v)));
            }
            constant.insert(v.name.clone());
        }
    }
    let pair_stats = |a: &ObsVar, b: &ObsVar| {
        let mut s = Stats { min_diff: i128::MAX, max_diff: i128::MIN, ..Default::default() };
        for t in tuples {
            if let (Some(x), Some(y)) = (t.values.get(&a.name), t.values.get(&b.name)) {
                let d = *x as i128 - *y as i128;
                s.n += 1;
                s.min_diff = s.min_diff.min(d);
                s.max_diff = s.max_diff.max(d);
                s.ever_equal |= d == 0;
            }
        }
        s
    };
    let related = |a: &ObsVar, b: &ObsVar| match (group(a), group(b)) {
        (Some(x), Some(y)) => x == y,
        _ => true,
    };
    let live: Vec<&ObsVar> = vars.iter().copied().filter(|v| !constant.contains(&v.name)).collect();
    // equality classes; representatives are the first members
    let mut rep: BTreeMap<&str, &str> = BTreeMap::new();
    for (i, a) in live.iter().enumerate() {
        if rep.contains_key(a.name.as_str()) {
            continue;
        }
        for b in &live[i + 1..] {
            if rep.contains_key(b.name.as_str()) || !related(a, b) {
                continue;
            }
            let s = pair_stats(a, b);
            if s.n >= cfg.min_support && s.min_diff == 0 && s.max_diff == 0 {
                rep.insert(&b.name, &a.name);
                out.push((Relation::Eq(a.name.clone(), b.name.clone(), 0), s.n));
            }
        }
    }
    let reps: Vec<&ObsVar> = live.iter().copied().filter(|v| !rep.contains_key(v.name.as_str())).collect();
    for (i, a) in reps.iter().enumerate() {
        for b in &reps[i + 1..] {
            if !related(a, b) {
                continue;
            }
            let s = pair_stats(a, b);
            if s.n < cfg.min_support {
                continue;
            }
            let m = cfg.max_const as i128;
            if s.min_diff == s.max_diff {
                if s.min_diff.abs() <= m {
                    out.push((Relation::Eq(a.name.clone(), b.name.clone(), s.min_diff as i64), s.n));
                } else {
                    out.push((Relation::Ne(a.name.clone(), b.name.clone()), s.n));
                }
                continue;
            }
            let mut le_strict = false;
            if s.max_diff.abs() <= m {
                out.push((Relation::Le(a.name.clone(), b.name.clone(), s.max_diff as i64), s.n));
                le_strict |= s.max_diff < 0;
            }
            if (-s.min_diff).abs() <= m {
                out.push((Relation::Le(b.name.clone(), a.name.clone(), (-s.min_diff) as i64), s.n));
                le_strict |= -s.min_diff < 0;
            }
            if !s.ever_equal && !le_strict {
                out.push((Relation::Ne(a.name.clone(), b.name.clone()), s.n));
            }
        }
    }
    out
}

/// Name for the lifted index variable that no program identifier uses.
fn index_var(p: &Program) -> String {
    let taken: BTreeSet<&str> =
        p.scalars.iter().map(String::as_str).chain(p.arrays.iter().map(|a| a.name.as_str())).collect();
    let mut name = "j".to_string();
    let mut k = 1;
    while taken.contains(name.as_str()) {
        name = format!("j{k}");
        k += 1;
    }
    name
}

/// Range of `j = e(l)` for `0 <= l < trip`, when `e` is affine in `l` with
/// non-zero coefficient.
fn lifted_range(e: &Expr, counter: &str, trip: &Expr, j: &Expr) -> Option<BoolExpr> {
    let (a, rest) = Affine::from_expr(e).split_var(counter)?;
    if a == 0 {
        return None;
    }
    let r = rest.to_expr();
    let last = simplify(&Expr::add(r.clone(), Expr::mul(Expr::Const(a), Expr::sub(trip.clone(), Expr::Const(1)))));
    let (lo, hi) = if a > 0 { (r.clone(), last) } else { (last, r.clone()) };
    let mut parts = vec![
        BoolExpr::rel(RelOp::Le, lo, j.clone()),
        BoolExpr::rel(RelOp::Le, j.clone(), hi),
    ];
    if a.abs() != 1 {
        let diff = if a > 0 { Expr::sub(j.clone(), r) } else { Expr::sub(r, j.clone()) };
        parts.push(BoolExpr::rel(
            RelOp::Eq,
            Expr::bin(BinOp::Mod, simplify(&diff), Expr::Const(a.abs())),
            Expr::Const(0),
        ));
    }
    Some(BoolExpr::conj(parts))
}

/// Mine every loop that precedes a mid cut-point and lift the relations.
pub fn mine(p: &Program, specs: &[LoopObs], tuples: &[TraceTuple], cfg: &MinerConfig) -> Vec<Candidate> {
    let loops = p.loops();
    let jname = index_var(p);
    let j = Expr::var(jname.clone());
    let mut out = Vec::new();
    for spec in specs {
        if spec.cutpoint == CutPoint::End {
            continue;
        }
        let lp = loops[spec.loop_id];
        let mine_tuples: Vec<&TraceTuple> = tuples.iter().filter(|t| t.loop_id == spec.loop_id).collect();
        if mine_tuples.is_empty() {
            continue;
        }
        let kinds: BTreeMap<&str, &ObsKind> = spec.vars.iter().map(|v| (v.name.as_str(), &v.kind)).collect();
        for (rel, support) in mine_loop(spec, &mine_tuples, cfg) {
            let cells: BTreeSet<Expr> = rel
                .vars()
                .iter()
                .filter_map(|v| match kinds[v] {
                    ObsKind::Cell { index, .. } => Some(index.clone()),
                    ObsKind::Scalar(_) => None,
                })
                .collect();
            let assertion = match cells.iter().next() {
                None => QuantAssertion::fact(rel.to_bool(&|v| Expr::var(v.to_string()))),
                Some(e) => {
                    let Some(range) = lifted_range(e, &lp.counter, &lp.trip, &j) else { continue };
                    let body = rel.to_bool(&|v| match kinds[v] {
                        ObsKind::Cell { array, .. } => Expr::read(array.clone(), j.clone()),
                        ObsKind::Scalar(s) => Expr::var(s.clone()),
                    });
                    QuantAssertion::new(vec![jname.clone()], range, body)
                }
            };
            out.push(Candidate {
                cutpoint: spec.cutpoint,
                loop_id: spec.loop_id,
                relation: rel,
                assertion,
                support,
                status: CandStatus::Untried,
            });
        }
    }
    out
}

/// Mark a candidate dropped; later rounds skip it.
pub fn drop_candidate(c: &mut Candidate) {
    c.status = CandStatus::Dropped;
}
