// SPDX-License-Identifier: Apache-2.0

//! Machine-readable run report. Keys appear in declaration order.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use crate::driver::{Status, TileInfo, Verdict};
use crate::exec::State;
use crate::miner::CandStatus;
use crate::vcgen::{TaskKind, TaskStatus};

#[derive(Debug, Serialize)]
pub struct Report<'a> {
    pub benchmark: &'a str,
    pub status: Status,
    pub tiles: &'a [TileInfo],
    pub tasks: Vec<TaskEntry<'a>>,
    pub candidates: Vec<CandidateEntry>,
    pub notes: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cex: Option<CexEntry>,
}

#[derive(Debug, Serialize)]
pub struct TaskEntry<'a> {
    pub kind: TaskKind,
    pub segment: &'a str,
    pub status: TaskStatus,
    pub time_ms: u64,
}

#[derive(Debug, Serialize)]
pub struct CandidateEntry {
    pub cutpoint: String,
    pub formula: String,
    pub status: CandStatus,
}

#[derive(Debug, Serialize)]
pub struct CexEntry {
    pub model: BTreeMap<String, Value>,
}

/// Scalars as integers and arrays as lists.
pub fn state_json(s: &State) -> BTreeMap<String, Value> {
    let mut m = BTreeMap::new();
    for (k, v) in &s.scalars {
        m.insert(k.clone(), Value::from(*v));
    }
    for (k, v) in &s.arrays {
        m.insert(k.clone(), Value::from(v.clone()));
    }
    m
}

pub fn report(v: &Verdict) -> Report<'_> {
    Report {
        benchmark: &v.benchmark,
        status: v.status,
        tiles: &v.tiles,
        tasks: v
            .tasks
            .iter()
            .map(|t| TaskEntry {
                kind: t.kind,
                segment: &t.segment,
                status: t.status,
                time_ms: t.time.as_millis() as u64,
            })
            .collect(),
        candidates: v
            .candidates
            .iter()
            .map(|c| CandidateEntry {
                cutpoint: c.cutpoint.to_string(),
                formula: c.assertion.to_string(),
                status: c.status,
            })
            .collect(),
        notes: &v.notes,
        cex: v.cex.as_ref().map(|c| CexEntry { model: state_json(&c.initial) }),
    }
}

pub fn to_json(v: &Verdict) -> String {
    serde_json::to_string_pretty(&report(v)).expect("report serializes")
}
