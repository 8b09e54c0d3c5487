// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};

use tileproof::cfg::build_cfg;
use tileproof::driver::{tiled_verify, RunPlan, Status};
use tileproof::frontend::parse_named;
use tileproof::report::{state_json, to_json};
use tileproof::smt::{Session, SolverConfig};

const USAGE_ERROR: u8 = 3;

#[derive(Parser)]
#[command(name = "tileproof", version, about = "Tiling-based verifier for quantified array assertions")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Verify the post-condition of a program.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct VerifyArgs {
    file: PathBuf,
    /// Loop unwinding for the counterexample search.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    unwind: u32,
    /// Refinement rounds.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    rounds: u32,
    /// Random runs for candidate mining.
    #[arg(long, default_value_t = 10)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// SMT solver executable.
    #[arg(long, env = "TILEPROOF_SOLVER")]
    solver: Option<String>,
    /// Also run the strict tile checks and the tightness check.
    #[arg(long)]
    strict_tiles: bool,
    /// Per-task solver timeout in seconds.
    #[arg(long, default_value_t = 10.0)]
    timeout: f64,
    /// Overall time budget in seconds.
    #[arg(long, default_value_t = 900.0)]
    global_timeout: f64,
    /// Write the JSON report here.
    #[arg(long, value_name = "OUT")]
    json: Option<PathBuf>,
    /// Print the control-flow graph in DOT.
    #[arg(long)]
    dump_cfg: bool,
    /// Print the tiles.
    #[arg(long)]
    dump_tiles: bool,
    /// Print the mined candidates.
    #[arg(long)]
    dump_candidates: bool,
    /// Write every solver query to DIR.
    #[arg(long, value_name = "DIR")]
    dump_smt: Option<PathBuf>,
    /// Write trace tuples as JSON lines.
    #[arg(long, value_name = "FILE")]
    trace_out: Option<PathBuf>,
}

fn seconds(s: f64, what: &str) -> Result<Duration, String> {
    if s.is_finite() && s > 0.0 {
        Ok(Duration::from_secs_f64(s))
    } else {
        Err(format!("{what} must be positive"))
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), String> {
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn verify(a: VerifyArgs) -> Result<Status, String> {
    let display = a.file.display().to_string();
    let src = fs::read_to_string(&a.file).map_err(|e| format!("{display}: {e}"))?;
    let stem = a.file.file_stem().map_or("program".into(), |s| s.to_string_lossy().into_owned());
    let program = parse_named(&src, &stem).map_err(|e| e.render(&display))?;
    let plan = RunPlan {
        unwind: a.unwind,
        rounds: a.rounds,
        runs: a.runs,
        seed: a.seed,
        task_timeout: seconds(a.timeout, "--timeout")?,
        global_timeout: seconds(a.global_timeout, "--global-timeout")?,
        strict: a.strict_tiles,
        ..RunPlan::default()
    };
    let config = SolverConfig::locate(a.solver.as_deref()).map_err(|e| e.to_string())?;
    let mut session = Session::new(config, plan.task_timeout.as_millis().max(1) as u64)
        .with_deadline(Instant::now() + plan.global_timeout);
    if let Some(dir) = &a.dump_smt {
        fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        session = session.with_dump(dir.clone(), &program.name);
    }
    if a.dump_cfg {
        print!("{}", build_cfg(&program).to_dot(&program.name));
    }

    let v = tiled_verify(&program, &plan, &session);

    if a.dump_tiles {
        for t in &v.tiles {
            let closed = t.closed_form.as_deref().unwrap_or("-");
            println!("tile {} {}: {} [{closed}]", t.segment, t.array, t.formula);
        }
    }
    if a.dump_candidates {
        for c in &v.candidates {
            println!("candidate {} {} [{}] {:?}", c.cutpoint, c.assertion, c.provenance(), c.status);
        }
    }
    if let Some(path) = &a.trace_out {
        let mut out = String::new();
        for t in &v.traces {
            out.push_str(&serde_json::to_string(t).map_err(|e| e.to_string())?);
            out.push('\n');
        }
        write_file(path, &out)?;
    }
    if let Some(path) = &a.json {
        write_file(path, &to_json(&v))?;
    }

    let headline = match v.status {
        Status::Verified => "Post-condition verified!",
        Status::Violated => "Post condition violated!",
        Status::Inconclusive => "Inconclusive answer!",
        Status::Timeout => "Time out! Inconclusive answer!",
    };
    println!("{}: {headline}", program.name);
    let passed = v.tasks.iter().filter(|t| t.status == tileproof::vcgen::TaskStatus::Pass).count();
    println!("  {} tasks ({passed} passed), {} round(s), {:.2} s", v.tasks.len(), v.rounds, v.wall.as_secs_f64());
    for n in &v.notes {
        println!("  note: {n}");
    }
    if let Some(c) = &v.cex {
        let model = serde_json::to_string(&state_json(&c.initial)).map_err(|e| e.to_string())?;
        println!("  counterexample: {model}");
    }
    Ok(v.status)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { USAGE_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.cmd {
        Cmd::Verify(a) => match verify(a) {
            Ok(s) => ExitCode::from(s.exit_code() as u8),
            Err(msg) => {
                let _ = writeln!(std::io::stderr(), "{msg}");
                ExitCode::from(USAGE_ERROR)
            }
        },
    }
}
