// SPDX-License-Identifier: Apache-2.0

//! The verification loop: shallow counterexample search, candidate mining,
//! tiling, and proof rounds that drop candidates which fail.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::cfg::CutPoint;
use crate::exec::{run_random, RunConfig, State, TraceTuple};
use crate::frontend::ast::Program;
use crate::miner::{mine, observation_specs, CandStatus, Candidate, MinerConfig};
use crate::smt::Session;
use crate::vcgen::bmc::{encode_bmc, replay};
use crate::vcgen::{
    discharge, obligations, CheckTask, Conjunct, Ctx, Origin, Payload, Shape, TaskKind, TaskResult, TaskStatus, Tiles,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunPlan {
    pub unwind: u32,
    pub rounds: u32,
    pub runs: usize,
    pub seed: u64,
    pub task_timeout: Duration,
    pub global_timeout: Duration,
    pub strict: bool,
    pub miner: MinerConfig,
    pub array_size: i64,
}

impl Default for RunPlan {
    fn default() -> Self {
        RunPlan {
            unwind: 3,
            rounds: 3,
            runs: 10,
            seed: 0,
            task_timeout: Duration::from_secs(10),
            global_timeout: Duration::from_secs(900),
            strict: false,
            miner: MinerConfig::default(),
            array_size: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Verified,
    Violated,
    Inconclusive,
    Timeout,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Verified => 0,
            Status::Violated => 1,
            Status::Inconclusive | Status::Timeout => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TileInfo {
    pub segment: String,
    pub array: String,
    pub formula: String,
    pub closed_form: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub initial: State,
    pub last: State,
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub benchmark: String,
    pub status: Status,
    pub rounds: u32,
    pub wall: Duration,
    pub tiles: Vec<TileInfo>,
    /// Every task discharged, in dispatch order.
    pub tasks: Vec<TaskResult>,
    pub candidates: Vec<Candidate>,
    pub cex: Option<Counterexample>,
    /// Why the verdict is not Verified, and choices made on the way.
    pub notes: Vec<String>,
    pub traces: Vec<TraceTuple>,
}

impl Verdict {
    fn new(p: &Program) -> Self {
        Verdict {
            benchmark: p.name.clone(),
            status: Status::Inconclusive,
            rounds: 0,
            wall: Duration::ZERO,
            tiles: Vec::new(),
            tasks: Vec::new(),
            candidates: Vec::new(),
            cex: None,
            notes: Vec::new(),
            traces: Vec::new(),
        }
    }
}

fn run_tasks(tasks: &[CheckTask], session: &Session) -> Vec<TaskResult> {
    tasks.par_iter().map(|t| discharge(t, session)).collect()
}

fn describe(r: &TaskResult) -> String {
    let status = format!("{:?}", r.status).to_lowercase();
    let mut s = format!("{} {} {status}", r.kind.name(), r.segment);
    if !r.detail.is_empty() && r.status != TaskStatus::Fail {
        s.push_str(&format!(" ({})", r.detail));
    }
    s
}

/// Assertions at each cut-point: pre at Start, post at End, live
/// candidates at loop heads.
fn assertions(p: &Program, cands: &[Candidate]) -> BTreeMap<CutPoint, Vec<Conjunct>> {
    let mut at: BTreeMap<CutPoint, Vec<Conjunct>> = BTreeMap::new();
    at.insert(
        CutPoint::Start,
        p.pre.iter().enumerate().map(|(i, q)| Conjunct { origin: Origin::Pre(i), assertion: q.clone() }).collect(),
    );
    at.insert(
        CutPoint::End,
        p.post.iter().enumerate().map(|(i, q)| Conjunct { origin: Origin::Post(i), assertion: q.clone() }).collect(),
    );
    for (i, c) in cands.iter().enumerate() {
        if c.status != CandStatus::Dropped {
            at.entry(c.cutpoint)
                .or_default()
                .push(Conjunct { origin: Origin::Candidate(i), assertion: c.assertion.clone() });
        }
    }
    at
}

/// Verify `p` under `plan`. The session carries the solver, per-task
/// timeout and global deadline.
pub fn tiled_verify(p: &Program, plan: &RunPlan, session: &Session) -> Verdict {
    let start = Instant::now();
    let mut v = Verdict::new(p);
    let deadline_hit = |v: &mut Verdict| {
        v.status = Status::Timeout;
        v.notes.push("global timeout".into());
    };

    // shallow counterexample search
    match encode_bmc(p, plan.unwind.max(1)) {
        Ok(script) => {
            let t = CheckTask {
                kind: TaskKind::BmcCex,
                segment: "Start-End".into(),
                array: None,
                goal: None,
                advisory: false,
                payload: Payload::Query { script, fallback: None },
            };
            let r = discharge(&t, session);
            let found = if r.status == TaskStatus::Fail { r.model.as_ref().and_then(|m| replay(p, m)) } else { None };
            if r.status == TaskStatus::Fail && found.is_none() {
                v.notes.push("bounded counterexample did not replay; phase skipped".into());
            }
            v.tasks.push(r);
            if let Some((initial, last)) = found {
                v.status = Status::Violated;
                v.cex = Some(Counterexample { initial, last });
                v.wall = start.elapsed();
                return v;
            }
        }
        Err(e) => v.notes.push(format!("bounded search skipped: {e}")),
    }
    if session.past_deadline() {
        deadline_hit(&mut v);
        v.wall = start.elapsed();
        return v;
    }

    let shape = match Shape::of(p) {
        Ok(s) => s,
        Err(e) => {
            v.notes.push(e.to_string());
            v.wall = start.elapsed();
            return v;
        }
    };

    // candidate invariants at the cut-points after each loop
    let specs = observation_specs(p);
    let rc = RunConfig { runs: plan.runs, seed: plan.seed, array_size: plan.array_size, ..RunConfig::default() };
    match run_random(p, &rc, &specs) {
        Ok(tuples) => {
            v.candidates = mine(p, &specs, &tuples, &plan.miner);
            v.traces = tuples;
        }
        Err(e) => v.notes.push(format!("mining unavailable: {e}")),
    }

    // tiles, computed once
    let tiles = Tiles::compute(&shape, session);
    for k in 0..shape.loops.len() {
        let seg = shape.loop_id(k);
        for t in tiles.updated[k].values().chain(tiles.read[k].values()).flatten() {
            v.tiles.push(TileInfo {
                segment: seg.clone(),
                array: t.array.clone(),
                formula: t.formula_text(),
                closed_form: t.closed_text(),
            });
        }
    }
    let ctx = Ctx { program: p, shape: &shape, tiles: &tiles, strict: plan.strict };

    for round in 1..=plan.rounds.max(1) {
        v.rounds = round;
        let at = assertions(p, &v.candidates);
        let tasks = obligations(&ctx, &at);
        // range coverage first; slices of uncovered goals are not attempted
        let (gates, rest): (Vec<CheckTask>, Vec<CheckTask>) = tasks.into_iter().partition(|t| t.kind == TaskKind::T1);
        let gate_results = run_tasks(&gates, session);
        let blocked: BTreeSet<(String, Option<Origin>)> = gate_results
            .iter()
            .filter(|r| r.status != TaskStatus::Pass)
            .map(|r| (r.segment.clone(), r.goal))
            .collect();
        let rest: Vec<CheckTask> = rest
            .into_iter()
            .filter(|t| {
                !(matches!(t.kind, TaskKind::T2Star | TaskKind::T3Star)
                    && blocked.contains(&(t.segment.clone(), t.goal)))
            })
            .collect();
        let rest_results = run_tasks(&rest, session);
        let results: Vec<TaskResult> = gate_results.into_iter().chain(rest_results).collect();
        if session.past_deadline() {
            v.tasks.extend(results);
            deadline_hit(&mut v);
            v.wall = start.elapsed();
            return v;
        }

        let failing: Vec<&TaskResult> = results.iter().filter(|r| !r.advisory && r.status != TaskStatus::Pass).collect();
        let mut drop: BTreeSet<usize> = BTreeSet::new();
        for r in &failing {
            if let Some(Origin::Candidate(i)) = r.goal {
                drop.insert(i);
            }
        }
        if failing.is_empty() {
            for c in v.candidates.iter_mut().filter(|c| c.status != CandStatus::Dropped) {
                c.status = CandStatus::Proven;
            }
            v.tasks.extend(results);
            v.status = Status::Verified;
            v.wall = start.elapsed();
            return v;
        }
        let last = round == plan.rounds.max(1) || drop.is_empty();
        if last {
            for r in failing.iter().filter(|r| !matches!(r.goal, Some(Origin::Candidate(_)))) {
                let mut note = describe(r);
                if r.kind == TaskKind::T1 {
                    note.push_str(": range not covered by the tile; no other tile is tried");
                }
                v.notes.push(note);
            }
            if !drop.is_empty() {
                v.notes.push("refinement rounds exhausted".into());
            }
        }
        for i in drop {
            v.candidates[i].status = CandStatus::Dropped;
        }
        v.tasks.extend(results);
        if last {
            break;
        }
    }
    v.status = Status::Inconclusive;
    v.wall = start.elapsed();
    v
}
