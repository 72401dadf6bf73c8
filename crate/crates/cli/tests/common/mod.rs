//! Helpers shared by the CLI and acceptance test suites.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_sabench")
}

pub fn sabench(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("failed to launch sabench")
}

pub fn assert_exit(output: &Output, code: i32) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "expected exit {code}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

pub fn write_file(path: &Path, content: &str) {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).unwrap();
    }
    std::fs::write(path, content).unwrap();
}

pub fn read_json(path: &Path) -> serde_json::Value {
    let raw = std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()));
    serde_json::from_str(&raw).unwrap_or_else(|e| panic!("bad json {}: {e}", path.display()))
}

pub fn list_reports(run_dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(run_dir.join("reports"))
        .map(|rd| rd.filter_map(|e| e.ok().map(|e| e.path())).collect())
        .unwrap_or_default();
    v.sort();
    v
}

/// Synthetic-dataset config TOML with the given rosters pasted in.
pub fn synth_config(
    seed: u64,
    lookback: usize,
    horizon: usize,
    entities: usize,
    days: usize,
    weights: &[f64],
    noise_sd: f64,
    models: &str,
    methods: &str,
) -> String {
    let weight_list = weights
        .iter()
        .map(|w| format!("{w:?}"))
        .collect::<Vec<_>>()
        .join(", ");
    format!(
        r#"seed = {seed}
lookback = {lookback}
horizon = {horizon}

[dataset]
source = "synth"
entities = {entities}
days = {days}
k = {k}
weights = [{weight_list}]
noise_sd = {noise_sd:?}

{models}

{methods}
"#,
        k = weights.len(),
    )
}
