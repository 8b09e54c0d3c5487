// SPDX-License-Identifier: Apache-2.0

//! Control-flow graphs, cut-points and segments.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write};

use crate::frontend::ast::{BoolExpr, Expr, Program, Stmt};

pub type NodeId = usize;
pub type EdgeId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Start,
    End,
    Assign(String, Expr),
    Store(String, Expr, Expr),
    Assume(BoolExpr),
    Cond(BoolExpr),
    /// `counter < trip`
    Head { counter: String, trip: Expr },
    /// `counter := 0`
    Init(String),
    /// `counter := counter + 1`
    Incr(String),
}

impl NodeKind {
    fn is_cond(&self) -> bool {
        matches!(self, NodeKind::Cond(_) | NodeKind::Head { .. })
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::Start => write!(f, "Start"),
            NodeKind::End => write!(f, "End"),
            NodeKind::Assign(v, e) => write!(f, "{v} := {e}"),
            NodeKind::Store(a, i, e) => write!(f, "{a}[{i}] := {e}"),
            NodeKind::Assume(b) => write!(f, "assume({b})"),
            NodeKind::Cond(b) => write!(f, "{b}"),
            NodeKind::Head { counter, trip } => write!(f, "{counter} < {trip}"),
            NodeKind::Init(c) => write!(f, "{c} := 0"),
            NodeKind::Incr(c) => write!(f, "{c} := {c} + 1"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Tt,
    Ff,
    U,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub label: Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CutPoint {
    Start,
    /// Loop head, numbered from 1 in source order.
    Head(usize),
    End,
}

impl fmt::Display for CutPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CutPoint::Start => write!(f, "Start"),
            CutPoint::Head(k) => write!(f, "L{k}"),
            CutPoint::End => write!(f, "End"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub source: CutPoint,
    pub sink: CutPoint,
    pub nodes: BTreeSet<NodeId>,
    pub edges: BTreeSet<EdgeId>,
    /// Counter of the innermost loop enclosing the segment.
    pub ell: Option<String>,
    /// Counters of the loops enclosing that one, outermost first.
    pub outer_vars: Vec<String>,
}

impl Segment {
    /// `Start-L1`, `L1-L1`, ...; used in reports and dump file names.
    pub fn id(&self) -> String {
        format!("{}-{}", self.source, self.sink)
    }
}

#[derive(Debug, Clone)]
pub struct Cfg {
    pub nodes: Vec<NodeKind>,
    pub edges: Vec<Edge>,
    pub start: NodeId,
    pub end: NodeId,
    pub back_edges: BTreeSet<EdgeId>,
    /// Loop heads in source order.
    pub heads: Vec<NodeId>,
    /// Natural loop of each head.
    pub loop_nodes: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

struct Builder {
    nodes: Vec<NodeKind>,
    edges: Vec<Edge>,
}

type Exits = Vec<(NodeId, Label)>;

impl Builder {
    fn node(&mut self, k: NodeKind, preds: &Exits) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(k);
        for (p, l) in preds {
            self.edges.push(Edge { src: *p, dst: id, label: *l });
        }
        id
    }

    fn stmt(&mut self, s: &Stmt, preds: Exits) -> Exits {
        match s {
            Stmt::Skip => preds,
            Stmt::Assign(v, e) => vec![(self.node(NodeKind::Assign(v.clone(), e.clone()), &preds), Label::U)],
            Stmt::Store(a, i, e) => {
                vec![(self.node(NodeKind::Store(a.clone(), i.clone(), e.clone()), &preds), Label::U)]
            }
            Stmt::Assume(b) => vec![(self.node(NodeKind::Assume(b.clone()), &preds), Label::U)],
            Stmt::If(c, t, e) => {
                let n = self.node(NodeKind::Cond(c.clone()), &preds);
                let mut out = self.stmt(t, vec![(n, Label::Tt)]);
                out.extend(self.stmt(e, vec![(n, Label::Ff)]));
                out
            }
            Stmt::For(l) => {
                let init = self.node(NodeKind::Init(l.counter.clone()), &preds);
                let head =
                    self.node(NodeKind::Head { counter: l.counter.clone(), trip: l.trip.clone() }, &vec![(init, Label::U)]);
                let body = self.stmt(&l.body, vec![(head, Label::Tt)]);
                let incr = self.node(NodeKind::Incr(l.counter.clone()), &body);
                self.edges.push(Edge { src: incr, dst: head, label: Label::U });
                vec![(head, Label::Ff)]
            }
            Stmt::Seq(items) => items.iter().fold(preds, |p, s| self.stmt(s, p)),
        }
    }
}

/// CFG of a program body.
pub fn build_cfg(p: &Program) -> Cfg {
    let mut b = Builder { nodes: Vec::new(), edges: Vec::new() };
    let start = b.node(NodeKind::Start, &vec![]);
    let exits = b.stmt(&p.body, vec![(start, Label::U)]);
    let end = b.node(NodeKind::End, &exits);
    Cfg::from_parts(b.nodes, b.edges, start, end)
}

impl Cfg {
    /// Analyse an explicit graph: back-edges by depth-first search from
    /// `start`, heads as their targets, natural loops per head.
    pub fn from_parts(nodes: Vec<NodeKind>, edges: Vec<Edge>, start: NodeId, end: NodeId) -> Cfg {
        let mut cfg = Cfg {
            nodes,
            edges,
            start,
            end,
            back_edges: BTreeSet::new(),
            heads: Vec::new(),
            loop_nodes: BTreeMap::new(),
        };
        cfg.find_back_edges();
        let mut heads: BTreeSet<NodeId> = BTreeSet::new();
        for &e in &cfg.back_edges {
            heads.insert(cfg.edges[e].dst);
        }
        cfg.heads = heads.into_iter().collect();
        for &e in &cfg.back_edges.clone() {
            let Edge { src, dst, .. } = cfg.edges[e];
            let body = cfg.natural_loop(dst, src);
            cfg.loop_nodes.entry(dst).or_default().extend(body);
        }
        cfg
    }

    pub fn succs(&self, n: NodeId) -> impl Iterator<Item = (EdgeId, &Edge)> {
        self.edges.iter().enumerate().filter(move |(_, e)| e.src == n)
    }

    fn find_back_edges(&mut self) {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            White,
            Grey,
            Black,
        }
        let mut mark = vec![Mark::White; self.nodes.len()];
        let mut stack: Vec<(NodeId, Vec<EdgeId>)> = Vec::new();
        let out = |n: NodeId| -> Vec<EdgeId> {
            let mut v: Vec<EdgeId> = self.edges.iter().enumerate().filter(|(_, e)| e.src == n).map(|(i, _)| i).collect();
            v.reverse();
            v
        };
        mark[self.start] = Mark::Grey;
        stack.push((self.start, out(self.start)));
        let mut back = BTreeSet::new();
        while let Some((n, pending)) = stack.last_mut() {
            match pending.pop() {
                Some(e) => {
                    let d = self.edges[e].dst;
                    match mark[d] {
                        Mark::Grey => {
                            back.insert(e);
                        }
                        Mark::White => {
                            mark[d] = Mark::Grey;
                            let o = out(d);
                            stack.push((d, o));
                        }
                        Mark::Black => {}
                    }
                }
                None => {
                    mark[*n] = Mark::Black;
                    stack.pop();
                }
            }
        }
        self.back_edges = back;
    }

    fn natural_loop(&self, head: NodeId, tail: NodeId) -> BTreeSet<NodeId> {
        let mut body = BTreeSet::from([head]);
        let mut work = vec![tail];
        while let Some(n) = work.pop() {
            if body.insert(n) {
                work.extend(self.edges.iter().filter(|e| e.dst == n).map(|e| e.src));
            }
        }
        body
    }

    pub fn cut_point(&self, n: NodeId) -> Option<CutPoint> {
        if n == self.start {
            Some(CutPoint::Start)
        } else if n == self.end {
            Some(CutPoint::End)
        } else {
            self.heads.iter().position(|h| *h == n).map(|k| CutPoint::Head(k + 1))
        }
    }

    pub fn cut_node(&self, c: CutPoint) -> NodeId {
        match c {
            CutPoint::Start => self.start,
            CutPoint::End => self.end,
            CutPoint::Head(k) => self.heads[k - 1],
        }
    }

    pub fn counter_of(&self, head: NodeId) -> String {
        match &self.nodes[head] {
            NodeKind::Head { counter, .. } => counter.clone(),
            _ => format!("l{head}"),
        }
    }

    /// Heads of the loops containing all of `nodes`, innermost first.
    fn enclosing(&self, nodes: &BTreeSet<NodeId>) -> Vec<NodeId> {
        let mut v: Vec<NodeId> =
            self.heads.iter().copied().filter(|h| nodes.is_subset(&self.loop_nodes[h])).collect();
        v.sort_by_key(|h| self.loop_nodes[h].len());
        v
    }

    /// All segments, ordered by source cut-point (Start, then heads in source
    /// order), then by the label leaving the source (`tt` first), then sink.
    pub fn segments(&self) -> Vec<Segment> {
        let mut sources = vec![self.start];
        sources.extend(&self.heads);
        let mut out = Vec::new();
        for src in sources {
            let mut found: BTreeMap<CutPoint, (Label, BTreeSet<NodeId>, BTreeSet<EdgeId>)> = BTreeMap::new();
            for (e0, first) in self.succs(src) {
                // region explored from e0, stopping at cut-points and back-edges
                let mut region_edges = Vec::new();
                let mut seen = BTreeSet::new();
                let mut work = vec![e0];
                while let Some(e) = work.pop() {
                    if !seen.insert(e) {
                        continue;
                    }
                    region_edges.push(e);
                    let d = self.edges[e].dst;
                    if self.back_edges.contains(&e) || self.cut_point(d).is_some() {
                        continue;
                    }
                    work.extend(self.succs(d).map(|(i, _)| i));
                }
                let sinks: BTreeSet<NodeId> = region_edges
                    .iter()
                    .map(|e| self.edges[*e].dst)
                    .filter(|d| self.cut_point(*d).is_some())
                    .collect();
                for sink in sinks {
                    // edges of the region that reach `sink`
                    let mut reach = BTreeSet::from([sink]);
                    let mut edges = BTreeSet::new();
                    let mut changed = true;
                    while changed {
                        changed = false;
                        for &e in &region_edges {
                            let Edge { src: s, dst: d, .. } = self.edges[e];
                            let via_cut = d != sink && self.cut_point(d).is_some();
                            if reach.contains(&d) && !via_cut && !edges.contains(&e) {
                                edges.insert(e);
                                reach.insert(s);
                                changed = true;
                            }
                        }
                    }
                    let cp = self.cut_point(sink).unwrap();
                    let entry = found.entry(cp).or_insert((first.label, BTreeSet::new(), BTreeSet::new()));
                    entry.0 = entry.0.min(first.label);
                    entry.1.extend(reach);
                    entry.1.insert(src);
                    entry.2.extend(edges.into_iter().filter(|e| !self.back_edges.contains(e)));
                }
            }
            let mut found: Vec<_> = found.into_iter().collect();
            found.sort_by_key(|(sink, (label, ..))| (*label, *sink));
            for (sink, (_, nodes, edges)) in found {
                let encl = self.enclosing(&nodes);
                let ell = encl.first().map(|h| self.counter_of(*h));
                let outer_vars = encl.iter().skip(1).rev().map(|h| self.counter_of(*h)).collect();
                out.push(Segment { source: self.cut_point(src).unwrap(), sink, nodes, edges, ell, outer_vars });
            }
        }
        out
    }

    /// True when the graph minus back-edges has no cycle.
    pub fn is_acyclic_without_back_edges(&self) -> bool {
        let n = self.nodes.len();
        let mut indeg = vec![0usize; n];
        for (i, e) in self.edges.iter().enumerate() {
            if !self.back_edges.contains(&i) {
                indeg[e.dst] += 1;
            }
        }
        let mut work: Vec<NodeId> = (0..n).filter(|i| indeg[*i] == 0).collect();
        let mut done = 0;
        while let Some(v) = work.pop() {
            done += 1;
            for (i, e) in self.succs(v) {
                if !self.back_edges.contains(&i) {
                    indeg[e.dst] -= 1;
                    if indeg[e.dst] == 0 {
                        work.push(e.dst);
                    }
                }
            }
        }
        done == n
    }

    /// Condition nodes have a `tt` and an `ff` successor; others one `U`.
    pub fn well_labelled(&self) -> bool {
        (0..self.nodes.len()).all(|n| {
            let labels: Vec<Label> = self.succs(n).map(|(_, e)| e.label).collect();
            if n == self.end {
                labels.is_empty()
            } else if self.nodes[n].is_cond() {
                let mut l = labels.clone();
                l.sort();
                l == [Label::Tt, Label::Ff]
            } else {
                labels == [Label::U]
            }
        })
    }

    /// Graphviz rendering.
    pub fn to_dot(&self, name: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "digraph \"{name}\" {{");
        let _ = writeln!(s, "  node [shape=box, fontname=monospace];");
        for (i, k) in self.nodes.iter().enumerate() {
            let label = k.to_string().replace('"', "\\\"");
            let shape = if self.heads.contains(&i) {
                ", shape=doubleoctagon"
            } else if k.is_cond() {
                ", shape=diamond"
            } else {
                ""
            };
            let _ = writeln!(s, "  n{i} [label=\"{i}: {label}\"{shape}];");
        }
        for (i, e) in self.edges.iter().enumerate() {
            let lab = match e.label {
                Label::Tt => "tt",
                Label::Ff => "ff",
                Label::U => "",
            };
            let style = if self.back_edges.contains(&i) { ", style=dashed" } else { "" };
            let _ = writeln!(s, "  n{} -> n{} [label=\"{lab}\"{style}];", e.src, e.dst);
        }
        s.push_str("}\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;

    #[test]
    fn straight_line_program_has_one_segment() {
        let p = parse("int x; x = 1; x = x + 1;").unwrap();
        let c = build_cfg(&p);
        assert!(c.heads.is_empty());
        let s = c.segments();
        assert_eq!(s.len(), 1);
        assert_eq!((s[0].source, s[0].sink, s[0].ell.clone()), (CutPoint::Start, CutPoint::End, None));
        assert_eq!(s[0].edges.len(), c.edges.len());
    }

    #[test]
    fn sequential_loops() {
        let p = parse(
            "int N, i; int a[N], b[N]; for (i = 0; i < N; i++) { a[i] = 0; } for (i = 0; i < N; i++) { if (a[i] > 0) b[i] = 1; }",
        )
        .unwrap();
        let c = build_cfg(&p);
        assert_eq!(c.heads.len(), 2);
        let ids: Vec<String> = c.segments().iter().map(Segment::id).collect();
        assert_eq!(ids, ["Start-L1", "L1-L1", "L1-L2", "L2-L2", "L2-End"]);
        let segs = c.segments();
        assert_eq!(segs[1].ell.as_deref(), Some("l_i"));
        assert_eq!(segs[2].ell, None);
        assert_eq!(segs[3].ell.as_deref(), Some("l_i_2"));
    }
}
