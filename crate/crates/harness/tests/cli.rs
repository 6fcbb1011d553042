use std::path::Path;
use std::process::{Command, Output};

use lrsense_harness::core::diagnostics::TraceRecord;
use lrsense_harness::presets::PRESET_NAMES;
use lrsense_harness::trace_csv::write_trace_csv;

fn lrsense(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lrsense"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn list_presets_prints_catalog() {
    let o = lrsense(&["list-presets"]);
    assert!(o.status.success());
    let names: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(names, PRESET_NAMES);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(lrsense(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(lrsense(&[]).status.code(), Some(2));
    assert_eq!(lrsense(&["rate-fit", "x.csv"]).status.code(), Some(2));
    assert_eq!(
        lrsense(&["rate-fit", "x.csv", "--field", "t", "--window", "9,3"]).status.code(),
        Some(2)
    );
}

#[test]
fn bad_config_exits_1_with_field_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "name = \"x\"\nmode = \"symmetric\"\nn = 4\nr = 2\nk = 3\neta = -1\nalpha = 0.1\nt_max = 5\n").unwrap();
    let o = lrsense(&["run", path_str(&cfg), "--out", path_str(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("eta"));

    std::fs::write(&cfg, "name = \"x\"\nbogus = 1\n").unwrap();
    assert_eq!(lrsense(&["run", path_str(&cfg)]).status.code(), Some(1));
    assert_eq!(lrsense(&["run", "/nonexistent/config.toml"]).status.code(), Some(1));
    assert_eq!(lrsense(&["preset", "fig9"]).status.code(), Some(1));
}

#[test]
fn rate_fit_recovers_geometric_rate() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.csv");
    let trace: Vec<TraceRecord> = (0..100)
        .map(|t| TraceRecord {
            t,
            loss_fro2: 0.9f64.powi(t as i32),
            loss_spec: 1.0,
            train_loss: 1.0,
            ..Default::default()
        })
        .collect();
    write_trace_csv(&trace, &path).unwrap();
    let o = lrsense(&["rate-fit", path_str(&path), "--field", "loss_fro2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rho = json["rho"].as_f64().unwrap();
    assert!((rho - 0.9).abs() <= 1e-9, "{rho}");
    assert_eq!(json["window"], serde_json::json!([50, 99]));

    let o = lrsense(&["rate-fit", path_str(&path), "--field", "loss_fro2", "--window", "10,20"]);
    let json: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(json["samples"], 11);

    let o = lrsense(&["rate-fit", path_str(&path), "--field", "norm_jk"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn preset_writes_traces_summary_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let o = lrsense(&["preset", "fig1-sym-exact", "--out", path_str(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for file in ["fig1-sym-exact-run00.csv", "fig1-sym-exact-summary.json", "fig1-sym-exact.svg"] {
        assert!(dir.path().join(file).is_file(), "{file} missing");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fig1-sym-exact-summary.json")).unwrap()).unwrap();
    assert_eq!(summary["runs"][0]["trace_file"], "fig1-sym-exact-run00.csv");
    assert!(stdout(&o).contains("rho="));
}

#[test]
fn run_config_and_rip_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "name = \"tiny\"\nmode = \"asymmetric\"\nn = 6\nr = 2\nk = 3\nm = 80\neta = 0.1\nalpha = [0.5, 0.2]\nt_max = 50\nlog_stride = 5\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = lrsense(&["run", path_str(&cfg), "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("tiny-run01.csv").is_file());

    let o = lrsense(&["rip-estimate", path_str(&cfg), "--trials", "10"]);
    assert!(o.status.success());
    let json: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!((json["trials"].as_u64(), json["rank_probed"].as_u64()), (Some(10), Some(5)));

    std::fs::write(&cfg, "name = \"id\"\nmode = \"asymmetric\"\nn = 6\nr = 2\nk = 3\neta = 0.1\nalpha = 0.5\nt_max = 5\n").unwrap();
    assert_eq!(lrsense(&["rip-estimate", path_str(&cfg)]).status.code(), Some(1));
}

#[test]
fn toy_check_passes_by_default_and_fails_on_bad_input() {
    let o = lrsense(&["toy-check"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("0 violations"));
    assert_eq!(lrsense(&["toy-check", "--alpha=-1"]).status.code(), Some(1));
}
