//! The `mpst` binary: exit codes and output formats.

use std::path::PathBuf;
use std::process::{Command, Output};

fn workspace(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../examples/workspaces").join(file)
}

fn mpst(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mpst")).args(args).output().expect("runs")
}

fn in_ws(file: &str, args: &[&str]) -> Output {
    let ws = workspace(file);
    let mut all = vec!["--workspace", ws.to_str().unwrap()];
    all.extend_from_slice(args);
    mpst(&all)
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

#[test]
fn check_infers_and_checks() {
    let o = in_ws("intro.mpst", &["check", "P1", "--gamma", "G"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).trim(), "∅");
    let o = in_ws("intro.mpst", &["check", "Q1", "--gamma", "G", "--delta", "D0"]);
    assert_eq!(code(&o), 0);
    let o = in_ws("intro.mpst", &["--json", "check", "Q1", "--gamma", "G", "--delta", "D0"]);
    assert_eq!(json(&o)["ok"], true);
}

#[test]
fn check_reports_type_errors() {
    let o = in_ws("intro.mpst", &["check", "Q1", "--gamma", "G", "--delta", "DEnd"]);
    assert_eq!(code(&o), 2);
    assert!(!o.stderr.is_empty());
    let o = mpst(&["check", "s[1][2]!<true>.0 | s[1][2]!<true>.0"]);
    assert_eq!(code(&o), 2);
    let o = in_ws("intro.mpst", &["--json", "check", "Q1", "--gamma", "G", "--delta", "DEnd"]);
    assert_eq!(json(&o)["exit"], 2);
}

#[test]
fn unresolved_names_exit_3() {
    assert_eq!(code(&in_ws("intro.mpst", &["check", "P1", "--gamma", "Nope"])), 3);
    assert_eq!(code(&in_ws("intro.mpst", &["check", "Q1", "--gamma", "G", "--delta", "Nope"])), 3);
    let missing = workspace("missing.mpst");
    assert_eq!(code(&mpst(&["--workspace", missing.to_str().unwrap(), "check", "0"])), 3);
}

#[test]
fn projection() {
    let o = mpst(&["project", "1->2:<bool>.end", "2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "1?(bool).end");
    let o = in_ws("intro.mpst", &["--json", "project", "G_a"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["3"], "1?(U).2?(U).end");
    let o = mpst(&["project", "1->2:{l: 2->3:<bool>.end, r: end}", "3"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn reduce_lists_successors() {
    let o = mpst(&["--json", "reduce", "s[1][2]!<true>.0 | s[2][1]?(x).0"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["successors"].as_array().unwrap().len(), 1);
    let o = mpst(&["reduce", "0"]);
    assert_eq!(stdout(&o).trim(), "no reductions");
}

#[test]
fn lts_graph_is_written_and_reloads() {
    let dir = std::env::temp_dir().join(format!("mpst-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("sys2.json");
    let o = in_ws("intro.mpst", &["--json", "lts", "Sys2", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = json(&o);
    let text = std::fs::read_to_string(&path).unwrap();
    let g: mpst_core::lts::LtsGraph = serde_json::from_str(&text).unwrap();
    assert_eq!(summary["states"], g.states.len());
    assert_eq!(summary["transitions"], g.transitions.len());
    assert_eq!(summary["truncated"], false);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn typed_lts_and_truncation() {
    let o = in_ws("intro.mpst", &["--json", "lts", "Q1", "--typed", "--gamma", "G", "--delta", "D0"]);
    assert_eq!(code(&o), 0);
    let labels: Vec<String> = json(&o)["transitions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["label"].as_str().unwrap().to_string())
        .collect();
    assert!(labels.iter().any(|l| l == "s_a!<2,3,v>"));
    let o = in_ws("intro.mpst", &["--max-states", "2", "lts", "Sys1"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).lines().next().unwrap().ends_with("(truncated)"));
}

#[test]
fn bisim_exit_codes() {
    let args = |extra: &[&'static str]| -> Vec<&'static str> {
        let mut v = vec!["bisim", "Q1", "Q2", "--gamma", "G", "--delta", "D0"];
        v.extend_from_slice(extra);
        v
    };
    assert_eq!(code(&in_ws("intro.mpst", &args(&[]))), 1);
    assert_eq!(code(&in_ws("intro.mpst", &args(&["--governed", "--witness", "E1"]))), 0);
    assert_eq!(code(&in_ws("intro.mpst", &args(&["--mode", "governed", "--witness", "E2"]))), 1);
    assert_eq!(code(&in_ws("intro.mpst", &args(&["--governed"]))), 2);
    assert_eq!(code(&in_ws("intro.mpst", &args(&["--governed", "--witness", "Nope"]))), 3);
    let o = in_ws("intro.mpst", &["bisim", "Closed", "Nil", "--gamma", "G", "--d1", "DClosed", "--d2", "DEnd"]);
    assert_eq!(code(&o), 0);
    let o = in_ws("intro.mpst", &["bisim", "Q1", "Q2", "--gamma", "G", "--delta", "DEnd"]);
    assert_eq!(code(&o), 2);
    let ooi = ["bisim", "S1", "S2", "--gamma", "G"];
    assert_eq!(code(&in_ws("ooi.mpst", &[&["--max-states", "5"][..], &ooi[..]].concat())), 4);
}

#[test]
fn bisim_json_certificate_and_trace() {
    let o = in_ws("intro.mpst", &["--json", "bisim", "Q1", "Q2", "--gamma", "G", "--delta", "D0"]);
    let v = json(&o);
    assert_eq!(v["verdict"], "not-bisimilar");
    let trace = v["distinguishing"]["trace"].as_array().unwrap();
    assert_eq!(trace.last().unwrap(), "s_a!<2,3,v>");
    let o = in_ws("intro.mpst", &["--json", "bisim", "Q1", "Q2", "--gamma", "G", "--delta", "D0", "--governed", "--witness", "E1"]);
    let v = json(&o);
    assert_eq!(v["verdict"], "bisimilar");
    assert_eq!(v["deltaConverges"], true);
    let rel = v["relation"].as_array().unwrap();
    assert!(!rel.is_empty());
    assert!(rel.iter().all(|p| p["witness"].is_string()));
}

#[test]
fn closed_pipe_is_quiet() {
    use std::io::Read;
    use std::process::Stdio;
    let ws = workspace("ooi.mpst");
    let mut child = Command::new(env!("CARGO_BIN_EXE_mpst"))
        .args(["--workspace", ws.to_str().unwrap(), "lts", "S2"])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    drop(child.stdout.take());
    let status = child.wait().unwrap();
    let mut err = String::new();
    child.stderr.take().unwrap().read_to_string(&mut err).unwrap();
    assert!(!err.contains("panicked"), "{err}");
    assert!(status.success());
}
