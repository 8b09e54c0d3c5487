// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Instant;

use super::{Script, SolverConfig, SolverResult, Status};

/// Shared front end to the solver: per-task timeout, a global deadline,
/// result caching by script text, and optional dumping of every script.
pub struct Session {
    pub config: SolverConfig,
    pub timeout_ms: u64,
    deadline: Option<Instant>,
    cache: Mutex<HashMap<String, SolverResult>>,
    dump: Option<(PathBuf, String)>,
    dump_names: Mutex<BTreeMap<String, usize>>,
}

impl Session {
    pub fn new(config: SolverConfig, timeout_ms: u64) -> Self {
        Session {
            config,
            timeout_ms,
            deadline: None,
            cache: Mutex::new(HashMap::new()),
            dump: None,
            dump_names: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn with_deadline(mut self, deadline: Instant) -> Self {
        self.deadline = Some(deadline);
        self
    }

    /// Write each script to `dir/<benchmark>.<kind>.<seg>.smt2`; repeated
    /// (kind, seg) pairs get `~2`, `~3`, ... appended to the segment.
    pub fn with_dump(mut self, dir: PathBuf, benchmark: &str) -> Self {
        self.dump = Some((dir, benchmark.to_string()));
        self
    }

    pub fn past_deadline(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    pub fn check(&self, kind: &str, seg: &str, script: &Script) -> SolverResult {
        let text = script.to_smt2();
        if let Some((dir, bench)) = &self.dump {
            let base = format!("{bench}.{kind}.{seg}");
            let n = {
                let mut names = self.dump_names.lock().unwrap();
                let n = names.entry(base.clone()).or_insert(0);
                *n += 1;
                *n
            };
            let file = if n == 1 { format!("{base}.smt2") } else { format!("{bench}.{kind}.{seg}~{n}.smt2") };
            let _ = std::fs::write(dir.join(file), &text);
        }
        if let Some(r) = self.cache.lock().unwrap().get(&text) {
            return r.clone();
        }
        if self.past_deadline() {
            return SolverResult {
                status: Status::Timeout,
                model: None,
                time: Default::default(),
                detail: "global timeout".into(),
            };
        }
        let mut budget = self.timeout_ms;
        if let Some(d) = self.deadline {
            let left = d.saturating_duration_since(Instant::now()).as_millis() as u64;
            budget = budget.min(left.max(1));
        }
        let r = self.config.check(&text, budget);
        if matches!(r.status, Status::Sat | Status::Unsat) {
            self.cache.lock().unwrap().insert(text, r.clone());
        }
        r
    }
}
