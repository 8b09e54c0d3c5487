// SPDX-License-Identifier: Apache-2.0
#![allow(dead_code)]

use std::fs;
use std::path::PathBuf;

pub fn benchmark_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("benchmarks")
}

/// `(name, source)` for every benchmark, sorted by name.
pub fn benchmarks() -> Vec<(String, String)> {
    let mut out: Vec<_> = fs::read_dir(benchmark_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "tla"))
        .map(|p| (p.file_stem().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap()))
        .collect();
    out.sort();
    out
}

pub fn benchmark(name: &str) -> String {
    fs::read_to_string(benchmark_dir().join(format!("{name}.tla"))).unwrap()
}
