// SPDX-License-Identifier: Apache-2.0

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use super::sexp::{parse_all, parse_model, Model, Sexp};

pub const SOLVER_ENV: &str = "TILEPROOF_SOLVER";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Sat,
    Unsat,
    Unknown,
    Timeout,
    Crash,
}

#[derive(Debug, Clone)]
pub struct SolverResult {
    pub status: Status,
    pub model: Option<Model>,
    pub time: Duration,
    /// Solver diagnostics for `Crash` and `Unknown`.
    pub detail: String,
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("solver binary `{0}` not found; set --solver or {SOLVER_ENV}")]
    Missing(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dialect {
    Z3,
    Cvc,
    Generic,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub path: PathBuf,
    dialect: Dialect,
}

fn on_path(name: &str) -> Option<PathBuf> {
    let p = Path::new(name);
    if p.components().count() > 1 {
        return p.is_file().then(|| p.to_path_buf());
    }
    std::env::var_os("PATH")
        .and_then(|paths| std::env::split_paths(&paths).map(|d| d.join(name)).find(|c| c.is_file()))
}

impl SolverConfig {
    /// Resolve the solver from an explicit path, then `TILEPROOF_SOLVER`,
    /// then `z3` on `PATH`.
    pub fn locate(explicit: Option<&str>) -> Result<Self, SolverError> {
        let env = std::env::var(SOLVER_ENV).ok().filter(|s| !s.is_empty());
        let name = explicit.map(String::from).or(env).unwrap_or_else(|| "z3".to_string());
        let path = on_path(&name).ok_or_else(|| SolverError::Missing(name.clone()))?;
        let stem = path.file_name().map(|f| f.to_string_lossy().to_lowercase()).unwrap_or_default();
        let dialect = if stem.contains("z3") {
            Dialect::Z3
        } else if stem.contains("cvc") {
            Dialect::Cvc
        } else {
            Dialect::Generic
        };
        Ok(SolverConfig { path, dialect })
    }

    fn args(&self, timeout_ms: u64) -> Vec<String> {
        match self.dialect {
            Dialect::Z3 => vec!["-in".into(), "-smt2".into(), format!("-t:{timeout_ms}")],
            Dialect::Cvc => vec!["--lang=smt2".into(), format!("--tlimit-per={timeout_ms}"), "--produce-models".into()],
            Dialect::Generic => vec![],
        }
    }

    /// Run a one-shot script. The process is killed at the deadline; any
    /// answer arriving after it counts as a timeout.
    pub fn check(&self, script: &str, timeout_ms: u64) -> SolverResult {
        let start = Instant::now();
        let deadline = Duration::from_millis(timeout_ms.max(1));
        let crash = |detail: String, start: Instant| SolverResult {
            status: Status::Crash,
            model: None,
            time: start.elapsed(),
            detail,
        };
        let mut child = match Command::new(&self.path)
            .args(self.args(timeout_ms.max(1)))
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
        {
            Ok(c) => c,
            Err(e) => return crash(format!("spawn failed: {e}"), start),
        };
        let mut stdin = child.stdin.take().unwrap();
        let text = script.to_string();
        let writer = std::thread::spawn(move || {
            let _ = stdin.write_all(text.as_bytes());
        });
        let mut stdout = child.stdout.take().unwrap();
        let reader = std::thread::spawn(move || {
            let mut s = String::new();
            let _ = stdout.read_to_string(&mut s);
            s
        });
        let mut stderr = child.stderr.take().unwrap();
        let err_reader = std::thread::spawn(move || {
            let mut s = String::new();
            let _ = stderr.read_to_string(&mut s);
            s
        });
        let mut timed_out = false;
        let exit = loop {
            match child.try_wait() {
                Ok(Some(status)) => break Some(status),
                Ok(None) if start.elapsed() >= deadline => {
                    let _ = child.kill();
                    let _ = child.wait();
                    timed_out = true;
                    break None;
                }
                Ok(None) => std::thread::sleep(Duration::from_micros(500)),
                Err(e) => return crash(format!("wait failed: {e}"), start),
            }
        };
        let _ = writer.join();
        let out = reader.join().unwrap_or_default();
        let err = err_reader.join().unwrap_or_default();
        let time = start.elapsed();
        if timed_out || time > deadline {
            return SolverResult { status: Status::Timeout, model: None, time, detail: String::new() };
        }
        let mut result = interpret(&out);
        result.time = time;
        if result.status == Status::Crash {
            let code = exit.and_then(|s| s.code()).map_or("signal".to_string(), |c| c.to_string());
            result.detail = format!("exit {code}: {} {}", result.detail, err.trim()).trim().to_string();
        }
        result
    }
}

/// Parse solver output: the first status line, an optional model, and
/// `(error ...)` responses.
pub(crate) fn interpret(out: &str) -> SolverResult {
    let mk = |status, model, detail: String| SolverResult { status, model, time: Duration::ZERO, detail };
    let items = match parse_all(out) {
        Ok(v) => v,
        Err(e) => return mk(Status::Crash, None, format!("unreadable output: {e}")),
    };
    let mut status = None;
    let mut rest = Vec::new();
    for it in items {
        match (&it, status) {
            (Sexp::List(v), _) if v.first().and_then(Sexp::atom) == Some("error") => {
                let msg = v.get(1).and_then(Sexp::atom).unwrap_or("").trim_matches('"').to_string();
                // z3 reports model requests after unsat/unknown as errors
                if status.is_some() && msg.contains("model") {
                    continue;
                }
                return mk(Status::Crash, None, msg);
            }
            (Sexp::Atom(a), None) => {
                status = match a.as_str() {
                    "sat" => Some(Status::Sat),
                    "unsat" => Some(Status::Unsat),
                    "unknown" => Some(Status::Unknown),
                    "timeout" => Some(Status::Timeout),
                    _ => None,
                };
            }
            (_, Some(_)) => rest.push(it),
            _ => {}
        }
    }
    match status {
        None => mk(Status::Crash, None, "no answer".into()),
        Some(Status::Sat) => {
            let model = (!rest.is_empty()).then(|| parse_model(&rest));
            mk(Status::Sat, model, String::new())
        }
        Some(s) => mk(s, None, String::new()),
    }
}
