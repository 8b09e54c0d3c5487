// SPDX-License-Identifier: Apache-2.0

//! Heuristic tiles: update index expressions per loop iteration, overlap
//! refinement, interval simplification, and strict tile validation.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::affine::{simplify, Affine};
use crate::frontend::ast::{BoolExpr, Expr, Loop, RelOp, SourceCounter, Stmt};
use crate::smt::{declare_free_ints, plain_bool, Expectation, Fresh, Outcome, Script, Session, Term};

pub const PATH_LIMIT: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TileError {
    #[error("index expression `{0}` depends on data and cannot be tiled")]
    Opaque(Expr),
    #[error("loop body has more than {PATH_LIMIT} paths")]
    PathLimit,
    #[error("nested loops are not tiled automatically")]
    Nested,
    #[error("no update expression survives refinement")]
    Empty,
}

/// Index expressions of the updates of each array in one iteration, in terms
/// of the iteration's entry state, in order of first occurrence.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Updates {
    pub per_array: BTreeMap<String, Vec<Expr>>,
    /// Arrays with at least one data-dependent index.
    pub opaque: BTreeMap<String, Expr>,
}

fn substitute(e: &Expr, env: &BTreeMap<String, Expr>) -> Expr {
    e.subst(&|v| env.get(v).cloned())
}

/// Walk every path through a loop body, substituting assignments forward so
/// each store index is expressed over entry values. Indices that read arrays
/// or mention scalars the body assigns are opaque.
pub fn collect_update_exprs(body: &Stmt) -> Result<Updates, TileError> {
    let mut written = BTreeSet::new();
    body.write_set(&mut written, &mut BTreeSet::new());
    let mut out = Updates::default();
    let mut paths = 0usize;
    walk(&[body], BTreeMap::new(), &written, &mut out, &mut paths)?;
    Ok(out)
}

fn walk(
    rest: &[&Stmt],
    mut env: BTreeMap<String, Expr>,
    written: &BTreeSet<String>,
    out: &mut Updates,
    paths: &mut usize,
) -> Result<(), TileError> {
    let Some((first, tail)) = rest.split_first() else {
        *paths += 1;
        return if *paths > PATH_LIMIT { Err(TileError::PathLimit) } else { Ok(()) };
    };
    match first {
        Stmt::Skip | Stmt::Assume(_) => walk(tail, env, written, out, paths),
        Stmt::Assign(v, e) => {
            let e = simplify(&substitute(e, &env));
            env.insert(v.clone(), e);
            walk(tail, env, written, out, paths)
        }
        Stmt::Store(a, idx, _) => {
            let e = simplify(&substitute(idx, &env));
            let mut vars = BTreeSet::new();
            e.scalars(&mut vars);
            if e.has_read() || !vars.is_disjoint(written) {
                out.opaque.entry(a.clone()).or_insert(e);
            } else {
                let list = out.per_array.entry(a.clone()).or_default();
                if !list.contains(&e) {
                    list.push(e);
                }
            }
            walk(tail, env, written, out, paths)
        }
        Stmt::If(_, t, e) => {
            let mut a: Vec<&Stmt> = vec![t];
            a.extend_from_slice(tail);
            walk(&a, env.clone(), written, out, paths)?;
            let mut b: Vec<&Stmt> = vec![e];
            b.extend_from_slice(tail);
            walk(&b, env, written, out, paths)
        }
        Stmt::Seq(items) => {
            let mut a: Vec<&Stmt> = items.iter().collect();
            a.extend_from_slice(tail);
            walk(&a, env, written, out, paths)
        }
        Stmt::For(_) => Err(TileError::Nested),
    }
}

/// Read index expressions per array over entry values, by the same forward
/// substitution; opaque reads are dropped.
pub fn collect_read_exprs(body: &Stmt) -> BTreeMap<String, Vec<Expr>> {
    let mut out: BTreeMap<String, Vec<Expr>> = BTreeMap::new();
    let mut written = BTreeSet::new();
    body.write_set(&mut written, &mut BTreeSet::new());
    fn go(
        rest: &[&Stmt],
        mut env: BTreeMap<String, Expr>,
        written: &BTreeSet<String>,
        out: &mut BTreeMap<String, Vec<Expr>>,
        budget: &mut usize,
    ) {
        let note = |e: &Expr, env: &BTreeMap<String, Expr>, out: &mut BTreeMap<String, Vec<Expr>>| {
            let mut reads = Vec::new();
            e.reads(&mut reads);
            for (a, i) in reads {
                let i = simplify(&substitute(&i, env));
                let mut vars = BTreeSet::new();
                i.scalars(&mut vars);
                if !i.has_read() && vars.is_disjoint(written) {
                    let l = out.entry(a).or_default();
                    if !l.contains(&i) {
                        l.push(i);
                    }
                }
            }
        };
        let Some((first, tail)) = rest.split_first() else {
            *budget = budget.saturating_sub(1);
            return;
        };
        if *budget == 0 {
            return;
        }
        match first {
            Stmt::Skip => go(tail, env, written, out, budget),
            Stmt::Assume(b) => {
                b.for_each_expr(&mut |e| note(e, &env, out));
                go(tail, env, written, out, budget)
            }
            Stmt::Assign(v, e) => {
                note(e, &env, out);
                let e = simplify(&substitute(e, &env));
                env.insert(v.clone(), e);
                go(tail, env, written, out, budget)
            }
            Stmt::Store(_, i, e) => {
                note(i, &env, out);
                note(e, &env, out);
                go(tail, env, written, out, budget)
            }
            Stmt::If(c, t, e) => {
                c.for_each_expr(&mut |x| note(x, &env, out));
                let mut a: Vec<&Stmt> = vec![t];
                a.extend_from_slice(tail);
                go(&a, env.clone(), written, out, budget);
                let mut b: Vec<&Stmt> = vec![e];
                b.extend_from_slice(tail);
                go(&b, env, written, out, budget)
            }
            Stmt::Seq(items) => {
                let mut a: Vec<&Stmt> = items.iter().collect();
                a.extend_from_slice(tail);
                go(&a, env, written, out, budget)
            }
            Stmt::For(l) => {
                note(&l.trip, &env, out);
                go(&[&l.body], env.clone(), written, out, budget);
                go(tail, env, written, out, budget)
            }
        }
    }
    let mut budget = PATH_LIMIT;
    go(&[body], BTreeMap::new(), &written, &mut out, &mut budget);
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tile {
    pub array: String,
    pub counter: String,
    pub trip: Expr,
    /// Expressions of the initial tile, before overlap refinement.
    pub init_exprs: Vec<Expr>,
    /// Surviving expressions; the tile is `j` equal to one of them.
    pub exprs: Vec<Expr>,
    /// `lo <= j < hi`, equivalent to the disjunction when present.
    pub closed: Option<(Expr, Expr)>,
    pub source: Option<SourceCounter>,
}

fn disjunction(exprs: &[Expr], counter: &str, l: &Expr, j: &Expr) -> BoolExpr {
    exprs
        .iter()
        .map(|e| BoolExpr::rel(RelOp::Eq, j.clone(), e.subst_var(counter, l)))
        .reduce(BoolExpr::or)
        .unwrap_or(BoolExpr::False)
}

impl Tile {
    /// `τ(l, j)` in disjunctive form.
    pub fn formula_at(&self, l: &Expr, j: &Expr) -> BoolExpr {
        disjunction(&self.exprs, &self.counter, l, j)
    }

    pub fn init_formula_at(&self, l: &Expr, j: &Expr) -> BoolExpr {
        disjunction(&self.init_exprs, &self.counter, l, j)
    }

    pub fn closed_at(&self, l: &Expr, j: &Expr) -> Option<BoolExpr> {
        let (lo, hi) = self.closed.as_ref()?;
        Some(BoolExpr::and(
            BoolExpr::rel(RelOp::Le, simplify(&lo.subst_var(&self.counter, l)), j.clone()),
            BoolExpr::rel(RelOp::Lt, j.clone(), simplify(&hi.subst_var(&self.counter, l))),
        ))
    }

    /// The closed form when available, else the disjunction.
    pub fn at(&self, l: &Expr, j: &Expr) -> BoolExpr {
        self.closed_at(l, j).unwrap_or_else(|| self.formula_at(l, j))
    }

    /// Counter expressed in the source loop variable, when the loop was
    /// normalized from a counting loop.
    fn source_counter(&self) -> Option<(String, Expr)> {
        let s = self.source.as_ref()?;
        let v = Expr::var(s.var.clone());
        let l = if s.step > 0 { Expr::sub(v, s.start.clone()) } else { Expr::sub(s.start.clone(), v) };
        Some((s.var.clone(), simplify(&l)))
    }

    pub fn formula_text(&self) -> String {
        self.formula_at(&Expr::var(self.counter.clone()), &Expr::var("j")).to_string()
    }

    /// Closed form in source coordinates when the loop had a source variable.
    pub fn closed_text(&self) -> Option<String> {
        let l = match self.source_counter() {
            Some((_, l)) => l,
            None => Expr::var(self.counter.clone()),
        };
        self.closed_at(&l, &Expr::var("j")).map(|b| b.to_string())
    }
}

/// `{a*l + b, ..., a*l + b + m - 1}` in any order gives `a*l + b <= j <
/// a*l + b + m`; anything else gives `None`.
pub fn simplify_interval(exprs: &[Expr], counter: &str) -> Option<(Expr, Expr)> {
    let first = Affine::from_expr(exprs.first()?);
    let (a0, rest0) = first.split_var(counter)?;
    let mut offsets = Vec::new();
    for e in exprs {
        let (a, rest) = Affine::from_expr(e).split_var(counter)?;
        if a != a0 {
            return None;
        }
        offsets.push(rest.plus(&rest0.scale(-1)).as_constant()?);
    }
    offsets.sort_unstable();
    offsets.dedup();
    let min = offsets[0];
    if offsets.iter().enumerate().any(|(i, o)| *o != min + i as i64) {
        return None;
    }
    let base = Affine::from_expr(&Expr::mul(Expr::Const(a0), Expr::var(counter))).plus(&rest0);
    let lo = base.plus(&Affine::constant(min));
    let hi = lo.plus(&Affine::constant(offsets.len() as i64));
    Some((lo.to_expr(), hi.to_expr()))
}

fn term(b: &BoolExpr) -> Term {
    plain_bool(b)
}

/// Refine and simplify a tile from its initial expressions.
pub fn build_tile(
    array: &str,
    lp: &Loop,
    init_exprs: Vec<Expr>,
    session: &Session,
    seg: &str,
) -> Result<Tile, TileError> {
    let counter = &lp.counter;
    let mut fresh = Fresh::new();
    let k = Expr::var(fresh.name("k"));
    let l = Expr::var(counter.clone());
    let later = simplify(&Expr::add(l.clone(), k.clone()));
    let mut survivors = Vec::new();
    for e in &init_exprs {
        // can a later iteration also write index e(l)?
        let mut s = Script::new(Expectation::UnsatMeansPass);
        s.assert(term(&BoolExpr::conj([
            BoolExpr::rel(RelOp::Le, Expr::Const(0), l.clone()),
            BoolExpr::rel(RelOp::Ge, k.clone(), Expr::Const(1)),
            BoolExpr::rel(RelOp::Lt, later.clone(), lp.trip.clone()),
            BoolExpr::rel(RelOp::Ge, lp.trip.clone(), Expr::Const(2)),
            disjunction(&init_exprs, counter, &later, e),
        ])));
        declare_free_ints(&mut s);
        let r = session.check("TILE", seg, &s);
        if Outcome::of(r.status, s.expect) != Outcome::Fail {
            survivors.push(e.clone());
        }
    }
    if survivors.is_empty() {
        return Err(TileError::Empty);
    }
    let mut tile = Tile {
        array: array.to_string(),
        counter: counter.clone(),
        trip: lp.trip.clone(),
        init_exprs,
        exprs: survivors,
        closed: None,
        source: lp.source.clone(),
    };
    if let Some(c) = simplify_interval(&tile.exprs, counter) {
        tile.closed = Some(c);
        let j = Expr::var(fresh.name("j"));
        let closed = tile.closed_at(&l, &j).unwrap();
        let disj = tile.formula_at(&l, &j);
        let mut s = Script::new(Expectation::UnsatMeansPass);
        s.assert(Term::not(Term::eq(term(&closed), term(&disj))));
        declare_free_ints(&mut s);
        let r = session.check("TILE", seg, &s);
        if Outcome::of(r.status, s.expect) != Outcome::Pass {
            tile.closed = None;
        }
    }
    Ok(tile)
}

/// Tiles for every array the loop updates; arrays with opaque indices map
/// to an error.
pub fn find_heuristic_tile(lp: &Loop, session: &Session, seg: &str) -> BTreeMap<String, Result<Tile, TileError>> {
    let updates = match collect_update_exprs(&lp.body) {
        Ok(u) => u,
        Err(e) => {
            let mut arrs = BTreeSet::new();
            lp.body.write_set(&mut BTreeSet::new(), &mut arrs);
            return arrs.into_iter().map(|a| (a, Err(e.clone()))).collect();
        }
    };
    let mut out = BTreeMap::new();
    for (a, e) in &updates.opaque {
        out.insert(a.clone(), Err(TileError::Opaque(e.clone())));
    }
    for (a, exprs) in updates.per_array {
        if out.contains_key(&a) {
            continue;
        }
        out.insert(a.clone(), build_tile(&a, lp, exprs, session, seg));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StrictReport {
    pub disjoint: Outcome,
    pub range_like: Outcome,
    pub compact: Outcome,
}

/// Formulas whose unsatisfiability establishes the three strict properties,
/// over iterations in `[0, trip)`.
pub fn strict_queries(tile: &Tile, trip: &Expr) -> [BoolExpr; 3] {
    let v = |n: &str| Expr::var(n.to_string());
    let (k, k2, j, j1, j2) = (v("k!0"), v("k!1"), v("j!0"), v("j!1"), v("j!2"));
    let in_range = |x: &Expr| {
        BoolExpr::and(
            BoolExpr::rel(RelOp::Le, Expr::Const(0), x.clone()),
            BoolExpr::rel(RelOp::Lt, x.clone(), trip.clone()),
        )
    };
    let tau = |l: &Expr, jj: &Expr| tile.at(l, jj);
    let lt = |a: &Expr, b: &Expr| BoolExpr::rel(RelOp::Lt, a.clone(), b.clone());
    let k1 = simplify(&Expr::add(k.clone(), Expr::Const(1)));
    let disjoint = BoolExpr::conj([
        in_range(&k),
        in_range(&k2),
        BoolExpr::rel(RelOp::Ne, k.clone(), k2.clone()),
        tau(&k, &j),
        tau(&k2, &j),
    ]);
    let range_like = BoolExpr::conj([
        in_range(&k),
        lt(&j1, &j),
        lt(&j, &j2),
        tau(&k, &j1),
        tau(&k, &j2),
        BoolExpr::not(tau(&k, &j)),
    ]);
    let compact = BoolExpr::conj([
        in_range(&k),
        in_range(&k1),
        tau(&k, &j1),
        tau(&k1, &j2),
        lt(&j1, &j),
        lt(&j, &j2),
        BoolExpr::not(tau(&k, &j)),
        BoolExpr::not(tau(&k1, &j)),
    ]);
    [disjoint, range_like, compact]
}

pub fn strict_validate(
    tile: &Tile,
    trip: &Expr,
    assumptions: &[BoolExpr],
    session: &Session,
    seg: &str,
) -> StrictReport {
    let run = |q: &BoolExpr| {
        let mut s = Script::new(Expectation::UnsatMeansPass);
        for a in assumptions {
            s.assert(term(a));
        }
        s.assert(term(q));
        declare_free_ints(&mut s);
        Outcome::of(session.check("STRICT", seg, &s).status, s.expect)
    };
    let [d, r, c] = strict_queries(tile, trip);
    StrictReport { disjoint: run(&d), range_like: run(&r), compact: run(&c) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;

    fn first_loop(src: &str) -> Loop {
        parse(src).unwrap().loops()[0].clone()
    }

    #[test]
    fn period4_update_exprs_are_normalized() {
        let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/benchmarks/period-4.tla")).unwrap();
        let lp = first_loop(&src);
        let u = collect_update_exprs(&lp.body).unwrap();
        let got: Vec<String> = u.per_array["volArray"].iter().map(|e| e.to_string()).collect();
        assert_eq!(got, ["4 * l_i", "4 * l_i + 1", "4 * l_i + 2", "4 * l_i + 3"]);
        let (lo, hi) = simplify_interval(&u.per_array["volArray"], "l_i").unwrap();
        assert_eq!((lo.to_string(), hi.to_string()), ("4 * l_i".into(), "4 * l_i + 4".into()));
    }

    #[test]
    fn substitution_through_scalars_and_opaque_indices() {
        let lp = first_loop("int N, x; counter l; int A[N], B[N]; for (l := 0; l < N; l := l + 1) { x := l + 2; A[x] := 0; B[A[l]] := 1; }");
        let u = collect_update_exprs(&lp.body).unwrap();
        assert_eq!(u.per_array["A"], vec![parse_expr("l + 2")]);
        assert!(u.opaque.contains_key("B"));
    }

    fn parse_expr(s: &str) -> Expr {
        let p = parse(&format!("int l; ensures {s} == 0;")).unwrap();
        let BoolExpr::Rel(_, e, _) = &p.post[0].body else { panic!() };
        simplify(e)
    }

    #[test]
    fn interval_simplification() {
        let e = |s: &str| parse_expr(s);
        assert!(simplify_interval(&[e("l")], "l").is_some());
        assert_eq!(simplify_interval(&[e("2 * l"), e("2 * l + 3")], "l"), None);
        let (lo, hi) = simplify_interval(&[e("l + 1"), e("l")], "l").unwrap();
        assert_eq!((lo.to_string(), hi.to_string()), ("l".into(), "l + 2".into()));
    }
}
