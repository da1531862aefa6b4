use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use drxp::report::RunReport;
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn drxp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drxp")).args(args).env_remove("DRXP_ORACLE_CMD").output().unwrap()
}

fn explain_args<'a>(model: &'a str, instance: &'a str, eps: &'a str, norm: &'a str) -> Vec<&'a str> {
    vec!["explain", "--model", model, "--instance", instance, "--epsilon", eps, "--norm", norm]
}

fn report_of(out: &Output) -> RunReport {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    RunReport::parse(std::str::from_utf8(&out.stdout).unwrap()).unwrap()
}

fn sets(report: &RunReport, kind: &str) -> Vec<String> {
    report
        .results
        .iter()
        .filter(|r| r.kind.to_string() == kind)
        .map(|r| r.features.to_string())
        .collect()
}

#[test]
fn explain_example7() {
    let model = fixture("example7.model");
    let mut args = explain_args(model.to_str().unwrap(), "1,1,1:1", "1.5", "l1");
    args.extend(["--kind", "axp", "--algo", "swift", "-q", "4", "--out", "-"]);
    let report = report_of(&drxp(&args));
    assert_eq!(sets(&report, "axp"), ["{1,3}"]);
    assert_eq!(report.results[0].verified, Some(true));
    assert_eq!(report.query.processors, Some(4));
}

#[test]
fn enumerate_example6() {
    let model = fixture("example6.model");
    let mut args = explain_args(model.to_str().unwrap(), "1,1:1", "1", "linf");
    args.extend(["--enumerate", "--group", "--out", "-"]);
    let report = report_of(&drxp(&args));
    assert_eq!(sets(&report, "cxp"), ["{1}", "{2}"]);
    assert_eq!(report.complete, Some(true));
}

#[test]
fn instance_from_file_and_default_report_path() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("ex7.model");
    std::fs::copy(fixture("example7.model"), &model).unwrap();
    let instance = dir.path().join("v.txt");
    std::fs::write(&instance, "1,1,1:1\n").unwrap();
    let mut args = explain_args(model.to_str().unwrap(), instance.to_str().unwrap(), "1", "l1");
    args.extend(["--kind", "cxp"]);
    let out = drxp(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("cxp {"), "{stdout}");
    let written = std::fs::read_to_string(dir.path().join("ex7.cxp.report.json")).unwrap();
    assert_eq!(RunReport::parse(&written).unwrap().to_json(), written);
}

#[test]
fn stable_reports_do_not_depend_on_processors() {
    let model = fixture("example7.model");
    let render = |q: &str| {
        let mut args = explain_args(model.to_str().unwrap(), "1,1,1:1", "1", "l1");
        args.extend(["--enumerate", "--stable", "--order", "seed:4", "-q", q, "--out", "-"]);
        let out = drxp(&args);
        assert!(out.status.success());
        out.stdout
    };
    let one = render("1");
    assert_eq!(one, render("2"));
    assert_eq!(one, render("8"));
}

#[test]
fn exit_codes() {
    let model = fixture("example7.model");
    let model = model.to_str().unwrap();

    let out = drxp(&["explain", "--model", model, "--instance", "1,1,1:1", "--norm", "l1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--epsilon"));

    let out = drxp(&explain_args(model, "1,1,1:1", "1", "l7"));
    assert_eq!(out.status.code(), Some(2));

    // The instance is class 1, not 0.
    let out = drxp(&explain_args(model, "1,1,1:0", "1", "l1"));
    assert_eq!(out.status.code(), Some(2));

    let mut args = explain_args(model, "1,1,1:1", "0.1", "l1");
    args.extend(["--kind", "cxp", "--out", "-"]);
    assert_eq!(drxp(&args).status.code(), Some(1));

    let out = drxp(&explain_args("/nonexistent.model", "1,1,1:1", "1", "l1"));
    assert_eq!(out.status.code(), Some(2));
}

const ALWAYS_ROBUST: &str = r#"read line; echo '{"type":"ready"}'; while read line; do id=$(echo "$line" | sed -n 's/.*"id":\([0-9]*\).*/\1/p'); case "$line" in *check*) echo "{\"type\":\"result\",\"id\":$id,\"status\":\"robust\"}";; *shutdown*) exit 0;; esac; done"#;

#[test]
fn external_oracle_from_environment() {
    let model = fixture("example7.model");
    let mut args = explain_args(model.to_str().unwrap(), "1,1,1:1", "1", "l1");
    args.extend(["--algo", "deletion", "--out", "-"]);
    let run = |cmd: &str| Command::new(env!("CARGO_BIN_EXE_drxp")).args(&args).env("DRXP_ORACLE_CMD", cmd).output().unwrap();

    let report = report_of(&run(ALWAYS_ROBUST));
    assert!(report.oracle.name.starts_with("external:"));
    assert_eq!(sets(&report, "axp"), ["{}"]);

    assert_eq!(run("exit 0").status.code(), Some(3));
    let crash = r#"read line; echo '{"type":"ready"}'; read line; exit 1"#;
    assert_eq!(run(crash).status.code(), Some(3));
}

#[test]
fn bench_synthetic() {
    let out = drxp(&[
        "bench", "--synthetic", "--features", "40", "--breakers", "4", "--latency-ms", "20", "--algos",
        "deletion,swift", "-q", "1,8", "--format", "json",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows: Vec<Value> = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rows.len(), 3);
    let results: Vec<&Value> = rows.iter().map(|r| &r["result"]).collect();
    assert!(results.iter().all(|r| *r == results[0]));
    let wall = |alg: &str, q: u64| {
        rows.iter()
            .find(|r| r["algorithm"] == alg && r["processors"] == q)
            .map(|r| r["wall_time_ms"].as_f64().unwrap())
            .unwrap()
    };
    assert!(wall("swift", 8) < wall("deletion", 1));
    assert_eq!(rows[0]["oracle_calls"], 40);
}

#[test]
fn bench_cases_table() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/cases");
    let out = drxp(&["bench", "--cases", dir.to_str().unwrap(), "--algos", "deletion,dichotomic,swift", "-q", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.lines().next().unwrap().contains("fd_rate"));
    assert!(table.contains("example7_axp") && table.contains("{1,3}"), "{table}");
    assert!(table.contains("example6_cxp"));
    assert!(!table.contains("note:"), "{table}");
}

#[test]
fn bench_empty_suite() {
    let dir = tempfile::tempdir().unwrap();
    let out = drxp(&["bench", "--cases", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(drxp(&["bench"]).status.code(), Some(2));
}
