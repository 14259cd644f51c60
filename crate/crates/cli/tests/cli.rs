use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const TINY: &str = r#"{
    "budgets": {"I": 2, "S": 4, "K": 8},
    "tests": [[
        {"stage": 0, "component": 0, "cylinder": "0"},
        {"stage": 0, "component": 1, "cylinder": "00"},
        {"stage": 0, "component": 2, "cylinder": "000"},
        {"stage": 0, "component": 3, "cylinder": "CYL"}
    ]],
    "streams": [{"name": "x", "pad": "1", "period": "10", "random": true}]
}"#;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cantor-lab")).args(args).output().expect("binary runs")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn demo_trace(dir: &Path, select: &str) -> PathBuf {
    let trace = dir.join(format!("{select}.jsonl"));
    let out = run(&[
        "--scenario",
        scenario("demo.json").to_str().unwrap(),
        "--select",
        select,
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    trace
}

#[test]
fn lists_every_selector() {
    let out = run(&["list-constructions"]);
    assert!(out.status.success());
    let listing = text(&out.stdout);
    assert_eq!(listing.lines().count(), 14);
    for name in ["non_optimal_universal", "right_shift_cones", "rd_from_lay", "semidecidable_to_rd_star"] {
        assert!(listing.lines().any(|l| l.starts_with(&format!("{name}\t"))), "{name} missing");
    }
    assert!(listing.lines().all(|l| l.split('\t').count() == 3));
}

#[test]
fn run_writes_a_trace_with_sigma_events() {
    let dir = tempfile::tempdir().unwrap();
    let trace = demo_trace(dir.path(), "non_optimal_universal");
    let body = std::fs::read_to_string(trace).unwrap();
    let first: serde_json::Value = serde_json::from_str(body.lines().next().unwrap()).unwrap();
    assert_eq!(first["action"], "config");
    assert_eq!(first["payload"]["config"]["select"], "non_optimal_universal");
    let sigma = body.lines().filter_map(|l| serde_json::from_str::<serde_json::Value>(l).ok()).filter(|v| v["action"] == "sigma").count();
    assert!(sigma > 0);
}

#[test]
fn trace_goes_to_stdout_without_a_file() {
    let out = run(&["--scenario", scenario("demo.json").to_str().unwrap(), "--select", "rd_from_lay"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(text(&out.stdout).lines().all(|l| serde_json::from_str::<serde_json::Value>(l).is_ok()));
    assert!(text(&out.stderr).contains("0 failed"));
}

#[test]
fn depth_over_cap_exits_2() {
    let out = run(&["--scenario", scenario("demo.json").to_str().unwrap(), "--select", "lay_to_lay", "--depth", "65"]);
    assert_eq!(out.status.code(), Some(2), "{}", text(&out.stderr));
}

#[test]
fn unknown_selector_exits_2() {
    let out = run(&["--scenario", scenario("demo.json").to_str().unwrap(), "--select", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("unknown selector"));
}

#[test]
fn missing_reservoir_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("no-reservoir.json");
    std::fs::write(&path, TINY.replace("CYL", "1111")).unwrap();
    let out = run(&["--scenario", path.to_str().unwrap(), "--select", "rd_from_lay"]);
    assert_eq!(out.status.code(), Some(3), "{}", text(&out.stderr));
    assert!(text(&out.stderr).contains("U_0..U_2"));
}

#[test]
fn missing_scenario_file_exits_4() {
    let out = run(&["--scenario", "/nonexistent/scenario.json", "--select", "rd_from_lay"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn verify_passes_on_a_fresh_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = demo_trace(dir.path(), "lay_to_cn");
    let out = run(&["--verify", "--trace", trace.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stdout));
    let report = text(&out.stdout);
    assert!(report.contains("determinism: pass"));
    assert!(report.contains("claim contract: pass"));
}

#[test]
fn corrupted_trace_fails_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let trace = demo_trace(dir.path(), "non_optimal_universal");
    let body = std::fs::read_to_string(&trace).unwrap();
    let mut lines: Vec<String> = body.lines().map(String::from).collect();
    let at = lines.iter().position(|l| l.contains(r#""action":"sigma""#)).expect("sigma event");
    let mut ev: serde_json::Value = serde_json::from_str(&lines[at]).unwrap();
    let sigma = ev["payload"]["sigma"].as_str().unwrap().to_string();
    let flipped: String = sigma.chars().map(|c| if c == '0' { '1' } else { '0' }).collect();
    ev["payload"]["sigma"] = serde_json::Value::String(flipped);
    lines[at] = serde_json::to_string(&ev).unwrap();
    std::fs::write(&trace, lines.join("\n") + "\n").unwrap();
    let out = run(&["--verify", "--trace", trace.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stdout).contains("determinism: fail"));
}

#[test]
fn budget_check_count_covers_every_index_and_stage() {
    let dir = tempfile::tempdir().unwrap();
    let trace = demo_trace(dir.path(), "rd_from_lay");
    let out = run(&["--verify", "--trace", trace.to_str().unwrap()]);
    // demo: I = 12, S = 200.
    assert!(text(&out.stdout).contains(&format!("budget checks: {} pass", 13 * 201)), "{}", text(&out.stdout));
    let out = run(&["--verify", "--trace", trace.to_str().unwrap(), "--stride", "10"]);
    assert!(text(&out.stdout).contains(&format!("budget checks: {} pass", 13 * 21)));
}

#[test]
fn run_and_verify_in_one_call() {
    let out = run(&["--scenario", scenario("totality.json").to_str().unwrap(), "--select", "totality_coding", "--verify"]);
    assert_eq!(out.status.code(), Some(0), "{}{}", text(&out.stdout), text(&out.stderr));
    assert!(out.stdout.starts_with(b"select: totality_coding"));
}
