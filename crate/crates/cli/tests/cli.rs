// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bench(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/benchmarks").join(format!("{name}.tla"))
}

/// Fresh scratch directory per test.
fn scratch(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("tileproof-cli-{}-{tag}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

fn tileproof(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tileproof")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(code(&tileproof(&["verify", path(&bench("init"))])), 0);
    let o = tileproof(&["verify", path(&bench("init-u"))]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("counterexample"));

    let d = scratch("codes");
    let deep = d.join("deep.tla");
    fs::write(&deep, "int N, i; int a[N]; for (i = 0; i < N; i++) { a[i] = i; }\nensures forall j :: 0 <= j && j < N ==> a[j] < 4;\n")
        .unwrap();
    assert_eq!(code(&tileproof(&["verify", path(&deep)])), 2);

    assert_eq!(code(&tileproof(&["verify", path(&d.join("missing.tla"))])), 3);
    assert_eq!(code(&tileproof(&["verify", path(&bench("init")), "--unwind", "zero"])), 3);
    assert_eq!(code(&tileproof(&["verify", path(&bench("init")), "--rounds", "0"])), 3);
    assert_eq!(code(&tileproof(&["verify", path(&bench("init")), "--solver", path(&d.join("no-such-solver"))])), 3);
}

#[test]
fn diagnostics_carry_positions() {
    let d = scratch("diag");
    let f = d.join("bad.tla");
    fs::write(&f, "int N;\nN = ;\n").unwrap();
    let o = tileproof(&["verify", path(&f)]);
    assert_eq!(code(&o), 3);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.starts_with(&format!("{}:2:", path(&f))), "{err}");
}

#[test]
fn json_report_keys_in_order() {
    let d = scratch("json");
    let out = d.join("r.json");
    assert_eq!(code(&tileproof(&["verify", path(&bench("copy")), "--json", path(&out)])), 0);
    let text = fs::read_to_string(&out).unwrap();
    let pos = |k: &str| text.find(&format!("\"{k}\"")).unwrap_or_else(|| panic!("{k} missing"));
    let keys = ["benchmark", "status", "tiles", "tasks", "candidates"];
    assert!(keys.windows(2).all(|w| pos(w[0]) < pos(w[1])), "{text}");
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["status"], "Verified");
    assert!(v.get("cex").is_none());
    for k in ["segment", "array", "formula", "closed_form"] {
        assert!(v["tiles"][0].get(k).is_some(), "{k}");
    }
    for k in ["kind", "segment", "status", "time_ms"] {
        assert!(v["tasks"][0].get(k).is_some(), "{k}");
    }

    let out = d.join("u.json");
    assert_eq!(code(&tileproof(&["verify", path(&bench("copy-u")), "--json", path(&out)])), 1);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["status"], "Violated");
    assert!(v["cex"]["model"].is_object());
}

#[test]
fn strict_tiles_add_advisory_tasks() {
    let d = scratch("strict");
    let out = d.join("r.json");
    let o = tileproof(&["verify", path(&bench("period-4")), "--strict-tiles", "--json", path(&out)]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let kinds: Vec<&str> = v["tasks"].as_array().unwrap().iter().map(|t| t["kind"].as_str().unwrap()).collect();
    assert_eq!(kinds.iter().filter(|k| **k == "STRICT").count(), 3);
    assert!(kinds.contains(&"TIGHTNESS"));
}

#[test]
fn smt_dumps_and_traces() {
    let d = scratch("dumps");
    let smt = d.join("smt");
    let trace = d.join("t.jsonl");
    let o = tileproof(&["verify", path(&bench("init")), "--dump-smt", path(&smt), "--trace-out", path(&trace)]);
    assert_eq!(code(&o), 0);
    let names: Vec<String> = fs::read_dir(&smt).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert!(names.iter().any(|n| n.starts_with("init.T1.") && n.ends_with(".smt2")), "{names:?}");
    assert!(names.iter().all(|n| n.starts_with("init.") && n.ends_with(".smt2")));
    let first = fs::read_to_string(smt.join(&names[0])).unwrap();
    assert!(first.contains("(check-sat)"));

    let lines: Vec<serde_json::Value> =
        fs::read_to_string(&trace).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(!lines.is_empty());
    for l in &lines {
        assert!(l.get("cutpoint").is_some() && l.get("run").is_some() && l["values"].is_object(), "{l}");
    }
}

#[test]
fn dump_flags_print() {
    let o = tileproof(&["verify", path(&bench("period-4")), "--dump-tiles", "--dump-candidates", "--dump-cfg"]);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("tile L1-L1 volArray"), "{out}");
    assert!(out.contains("4 * i - 4 <= j && j < 4 * i"), "{out}");
}

#[test]
fn solver_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_tileproof"))
        .args(["verify", path(&bench("init"))])
        .env("TILEPROOF_SOLVER", "/nonexistent/solver")
        .output()
        .unwrap();
    assert_eq!(code(&o), 3);
}
