// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use tileproof::cfg::{build_cfg, Cfg, CutPoint, Edge, Label, NodeKind};
use tileproof::frontend::ast::{BoolExpr, Expr, RelOp};
use tileproof::frontend::parse;

mod common;

fn head(c: &str) -> NodeKind {
    NodeKind::Head { counter: c.into(), trip: Expr::var("N") }
}

/// The three-loop graph with an inner conditional exit.
fn figure_two() -> Cfg {
    let skip = || NodeKind::Assume(BoolExpr::True);
    let cond = NodeKind::Cond(BoolExpr::rel(RelOp::Gt, Expr::var("x"), Expr::Const(0)));
    // 0:S 1 2 3 4 5 6 7 8:E
    let nodes = vec![NodeKind::Start, head("l1"), head("l2"), head("l3"), skip(), skip(), cond, skip(), NodeKind::End];
    let e = |src, dst, label| Edge { src, dst, label };
    let edges = vec![
        e(0, 1, Label::U),
        e(1, 2, Label::Tt),
        e(2, 3, Label::Tt),
        e(3, 4, Label::Tt),
        e(3, 6, Label::Ff),
        e(4, 5, Label::U),
        e(6, 5, Label::Tt),
        e(5, 3, Label::U),  // e2
        e(6, 2, Label::Ff), // e1
        e(7, 1, Label::U),  // e3
        e(2, 7, Label::Ff),
        e(1, 8, Label::Ff),
    ];
    Cfg::from_parts(nodes, edges, 0, 8)
}

#[test]
fn figure_two_cut_points_back_edges_and_segments() {
    let c = figure_two();
    assert_eq!(c.heads, vec![1, 2, 3]);
    assert_eq!(c.back_edges, BTreeSet::from([7, 8, 9]));
    assert!(c.is_acyclic_without_back_edges());
    assert!(c.well_labelled());
    let segs = c.segments();
    let keys: Vec<(CutPoint, CutPoint)> = segs.iter().map(|s| (s.source, s.sink)).collect();
    use CutPoint::*;
    // the listed six plus 3 -> 6 -> 2, which leaves the inner loop through e1
    assert_eq!(
        keys,
        [(Start, Head(1)), (Head(1), Head(2)), (Head(1), End), (Head(2), Head(3)), (Head(2), Head(1)), (Head(3), Head(3)), (Head(3), Head(2))]
    );
    let inner = segs.iter().find(|s| (s.source, s.sink) == (Head(3), Head(3))).unwrap();
    assert_eq!(inner.nodes, BTreeSet::from([3, 4, 5, 6]));
    assert_eq!(inner.ell.as_deref(), Some("l3"));
    assert_eq!(inner.outer_vars, ["l1", "l2"]);
    let two_seven = segs.iter().find(|s| (s.source, s.sink) == (Head(2), Head(1))).unwrap();
    assert_eq!(two_seven.nodes, BTreeSet::from([1, 2, 7]));
    assert_eq!(two_seven.ell.as_deref(), Some("l1"));
    assert_eq!(segs[0].ell, None);
    assert_eq!(segs[2].ell, None);
}

#[test]
fn structured_programs_partition_their_edges() {
    let mut sources: Vec<String> = common::benchmarks().into_iter().map(|(_, s)| s).collect();
    sources.push(
        "int N, M, x; counter l, k; int A[N]; for (l := 0; l < N; l := l + 1) { x := 0; for (k := 0; k < M; k := k + 1) { if (x > 0) { A[l] := k; } } x := 1; }"
            .into(),
    );
    for src in sources {
        let p = parse(&src).unwrap();
        let c = build_cfg(&p);
        assert!(c.is_acyclic_without_back_edges());
        assert!(c.well_labelled());
        assert_eq!(c.heads.len(), p.loops().len());
        let segs = c.segments();
        let mut seen = BTreeSet::new();
        for s in &segs {
            for e in &s.edges {
                assert!(seen.insert(*e), "edge {e} in two segments of {}", p.name);
            }
            // interiors are cut-point free
            for n in &s.nodes {
                let cp = c.cut_point(*n);
                assert!(cp.is_none() || [c.cut_node(s.source), c.cut_node(s.sink)].contains(n));
            }
            let inside = s.nodes.iter().all(|n| c.loop_nodes.values().any(|l| l.contains(n)));
            assert_eq!(s.ell.is_some(), inside);
        }
        let all: BTreeSet<usize> = (0..c.edges.len()).filter(|e| !c.back_edges.contains(e)).collect();
        assert_eq!(seen, all, "{}", p.name);
        let covered: BTreeSet<usize> = segs.iter().flat_map(|s| s.nodes.iter().copied()).collect();
        assert_eq!(covered.len(), c.nodes.len());
    }
}

#[test]
fn nested_loop_segments_know_outer_counters() {
    let p = parse(
        "int N, M; counter l, k; int A[N]; for (l := 0; l < N; l := l + 1) { for (k := 0; k < M; k := k + 1) { A[l] := k; } }",
    )
    .unwrap();
    let segs = build_cfg(&p).segments();
    let ids: Vec<String> = segs.iter().map(|s| s.id()).collect();
    assert_eq!(ids, ["Start-L1", "L1-L2", "L1-End", "L2-L2", "L2-L1"]);
    assert_eq!(segs[3].ell.as_deref(), Some("k"));
    assert_eq!(segs[3].outer_vars, ["l"]);
    assert_eq!(segs[4].ell.as_deref(), Some("l"));
    assert!(segs[4].outer_vars.is_empty());
}

#[test]
fn period4_has_a_single_cut_point_and_dot_output() {
    let p = parse(&common::benchmark("period-4")).unwrap();
    let c = build_cfg(&p);
    assert_eq!(c.heads.len(), 1);
    let dot = c.to_dot("period-4");
    assert!(dot.starts_with("digraph \"period-4\""));
    assert!(dot.contains("style=dashed"));
}
