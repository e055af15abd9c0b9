#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::SystemTime;

pub fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the command in-process.
pub fn emt(args: &[&str]) -> Output {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = emt_cli::run_from(std::iter::once("emt").chain(args.iter().copied()), &mut out, &mut err);
    Output { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

/// Runs the built binary in `dir`.
pub fn emt_bin(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_emt"));
    cmd.current_dir(dir).args(args).env_remove("EMT_REGISTRY");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let o = cmd.output().unwrap();
    Output {
        code: o.status.code().unwrap_or(-1),
        stdout: String::from_utf8(o.stdout).unwrap(),
        stderr: String::from_utf8(o.stderr).unwrap(),
    }
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Arguments for the order process scenario.
pub fn scenario_args<'a>(target: &'a str, trace: &'a str) -> Vec<String> {
    [
        "transform",
        "--rules",
        p(&data("scenario/bpmn_mapping.emt")),
        "--source",
        p(&data("scenario/order_process.xml")),
        "--source-format",
        "archimate",
        "--registry",
        p(&data("scenario/aggregate_registry.json")),
        "--target",
        target,
        "--target-format",
        "bpmn",
        "--trace",
        trace,
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

pub fn args_ref(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

/// Path, size, modification time and content of every file below `dir`.
pub fn snapshot(dir: &Path) -> BTreeMap<PathBuf, (u64, SystemTime, Vec<u8>)> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_owned()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let entry = entry.unwrap();
            let meta = entry.metadata().unwrap();
            if meta.is_dir() {
                stack.push(entry.path());
            } else {
                let bytes = std::fs::read(entry.path()).unwrap();
                out.insert(entry.path(), (meta.len(), meta.modified().unwrap(), bytes));
            }
        }
    }
    out
}

/// Copies the shipped data tree into `dir`.
pub fn copy_data(dir: &Path) {
    for rel in [
        "scenario/bpmn_mapping.emt",
        "scenario/order_process.xml",
        "scenario/aggregate_registry.json",
        "samples/intermediates.emt",
        "table2.json",
    ] {
        let to = dir.join(rel);
        std::fs::create_dir_all(to.parent().unwrap()).unwrap();
        std::fs::copy(data(rel), to).unwrap();
    }
}
