use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use icb_core::fixtures::worked_example;
use icb_core::NetworkFile;

fn icb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_icb"))
        .args(args)
        .env_remove("ICB_SEED")
        .output()
        .expect("icb runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn fixture_file(dir: &tempfile::TempDir) -> PathBuf {
    let path = dir.path().join("fixture.json");
    let (net, _) = worked_example();
    fs::write(&path, NetworkFile::from_network(&net).to_json()).unwrap();
    path
}

fn cycle_file(dir: &tempfile::TempDir) -> PathBuf {
    let path = dir.path().join("cycle.json");
    let text = r#"{
        "n": 4, "source": 1,
        "edges": [[1,2],[2,3],[3,4],[4,1]],
        "types": [
            {"discrete": {"values": [2, 6], "probs": [0.5, 0.5]}},
            {"discrete": {"values": [1, 5], "probs": [0.5, 0.5]}},
            {"discrete": {"values": [3, 8], "probs": [0.5, 0.5]}},
            {"discrete": {"values": [2, 7], "probs": [0.5, 0.5]}}
        ]
    }"#;
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn demo_prints_reference_payments() {
    let out = icb(&["demo"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("t = [-9.33, 11.33, 7.33, -9.33]"), "{text}");
    assert!(text.contains("R = {2, 3}"));
    assert!(text.contains("budget sum = 0.00"));
    assert_eq!(text, stdout(&icb(&["demo"])));
}

#[test]
fn demo_json_is_an_outcome() {
    let out = icb(&["demo", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["mechanism"], "BIC-B");
    assert_eq!(v["routers"], serde_json::json!([2, 3]));
    assert_eq!(v["t"].as_array().unwrap().len(), 4);
}

#[test]
fn run_reproduces_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let graph = fixture_file(&dir);
    let graph = graph.to_str().unwrap();
    let out = icb(&[
        "run",
        "--graph",
        graph,
        "--announce",
        "10,15,13,8",
        "--mechanism",
        "bicb",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("t = [-9.33, 11.33, 7.33, -9.33]"));

    let out = icb(&[
        "run",
        "--graph",
        graph,
        "--announce",
        "10,15,13,8",
        "--json",
        "--trace",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    let outcome: serde_json::Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert_eq!(outcome["k"], serde_json::json!([0, 1, 1, 0]));
    assert_eq!(lines.next(), Some(r#"{"from":1,"to":2}"#));
}

#[test]
fn run_input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let graph = fixture_file(&dir);
    let graph = graph.to_str().unwrap();

    let out = icb(&[
        "run",
        "--graph",
        graph,
        "--announce",
        "10,15,13,8",
        "--mechanism",
        "dsicb",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not biconnected"));

    let out = icb(&["run", "--graph", graph, "--announce", "10,15,13"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("expected 4 entries, got 3"));

    let missing = dir.path().join("missing.json");
    let out = icb(&[
        "run",
        "--graph",
        missing.to_str().unwrap(),
        "--announce",
        "1,2",
    ]);
    assert_eq!(out.status.code(), Some(2));

    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"n\": 2, \"source\": 1}").unwrap();
    let out = icb(&["run", "--graph", bad.to_str().unwrap(), "--announce", "1,2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_dsicb_on_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let graph = cycle_file(&dir);
    let out = icb(&[
        "run",
        "--graph",
        graph.to_str().unwrap(),
        "--announce",
        "1,1,5,100",
        "--mechanism",
        "dsicb",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("paid = [0.00, 0.00, 100.00, 0.00]"), "{text}");
}

#[test]
fn verify_fixture_properties() {
    let dir = tempfile::tempdir().unwrap();
    let graph = fixture_file(&dir);
    let out = icb(&[
        "verify",
        "--graph",
        graph.to_str().unwrap(),
        "--checks",
        "bb,nonrouter,ir",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn verify_json_output() {
    let dir = tempfile::tempdir().unwrap();
    let graph = cycle_file(&dir);
    let out = icb(&[
        "verify",
        "--graph",
        graph.to_str().unwrap(),
        "--checks",
        "bb,dsic",
        "--allocation",
        "lcp-tree",
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let reports = v.as_array().unwrap();
    assert_eq!(reports.len(), 2);
    assert!(reports.iter().all(|r| r["passed"] == true));
}

#[test]
fn verify_random_bic() {
    let out = icb(&["verify", "--random", "5", "--checks", "bic", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}

#[test]
fn verify_reports_failures_with_exit_1() {
    // A small random instance where becoming a router pays off.
    let out = icb(&["verify", "--random", "4", "--checks", "bic", "--seed", "4"]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.starts_with("FAIL bayesian_ic"), "{text}");
    assert!(text.contains("\"kind\":\"bayesian\""));
}

#[test]
fn verify_unknown_check_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let graph = fixture_file(&dir);
    let out = icb(&[
        "verify",
        "--graph",
        graph.to_str().unwrap(),
        "--checks",
        "xyz",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn experiment_smoke_run() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("results");
    let out = icb(&[
        "experiment",
        "--instances",
        "2",
        "--n-list",
        "5",
        "--seed",
        "1",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let records = fs::read_to_string(out_dir.join("records.csv")).unwrap();
    assert_eq!(records.lines().count(), 1 + 2 * 2);
    let summary = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 2);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(json["summary"].as_array().unwrap().len(), 2);

    let again = dir.path().join("again");
    icb(&[
        "experiment",
        "--instances",
        "2",
        "--n-list",
        "5",
        "--seed",
        "1",
        "--out",
        again.to_str().unwrap(),
    ]);
    assert_eq!(
        records,
        fs::read_to_string(again.join("records.csv")).unwrap()
    );
}

#[test]
fn experiment_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"n_values": [6, 8], "instances": 3, "base_seed": 9}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = icb(&[
        "experiment",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let records = fs::read_to_string(out_dir.join("records.csv")).unwrap();
    assert_eq!(records.lines().count(), 1 + 2 * 3 * 2);
}

#[test]
fn experiment_unwritable_out_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain");
    fs::write(&file, "x").unwrap();
    let out = icb(&[
        "experiment",
        "--instances",
        "1",
        "--n-list",
        "5",
        "--out",
        file.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn experiment_invalid_config_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = icb(&[
        "experiment",
        "--instances",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}
