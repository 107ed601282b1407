use std::path::{Path, PathBuf};
use std::process::Command;

use zebralancer::harness::config::ScenarioConfig;
use zebralancer::harness::run_scenario;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"))
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_zebralancer"))
}

#[test]
fn every_bundled_scenario_passes() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ScenarioConfig::load(&path).unwrap();
        let run = run_scenario(&cfg);
        let failures: Vec<_> = run.report.failures().collect();
        assert!(failures.is_empty(), "{}: {failures:#?}", path.display());
        assert_eq!(run.report.conservation_checksum, 0, "{}", path.display());
        count += 1;
    }
    assert!(count >= 18);
}

#[test]
fn seed_override_changes_keys_but_not_outcome() {
    let mut cfg = ScenarioConfig::load(&scenario("majority_n3_honest")).unwrap();
    let a = run_scenario(&cfg);
    cfg.seed += 1;
    let b = run_scenario(&cfg);
    assert_ne!(a.trace, b.trace);
    let amounts = |r: &zebralancer::harness::Run| r.report.tasks[0].payouts.iter().map(|p| p.amount).collect::<Vec<_>>();
    assert_eq!(amounts(&a), amounts(&b));
}

#[test]
fn cli_run_writes_trace_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.tsv");
    let json = dir.path().join("r.json");
    let out = cli()
        .args(["run"])
        .arg(scenario("auction_lowest_k"))
        .arg("--trace")
        .arg(&trace)
        .arg("--json-report")
        .arg(&json)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(std::fs::read_to_string(&trace).unwrap().starts_with("#zebralancer-trace v1"));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert!(report.is_object());
}

#[test]
fn cli_reports_bad_config_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "seed = 1\n[[task]]\nkind = \"nonsense\"\n").unwrap();
    let out = cli().arg("run").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let missing = cli().arg("run").arg(dir.path().join("absent.toml")).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn cli_game_prints_json() {
    let out = cli().args(["game", "forgery", "--trials", "20", "--seed", "5"]).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["wins"], 0);
    assert_eq!(v["trials"], 20);
    let zero = cli().args(["game", "linkability", "--q", "0"]).output().unwrap();
    assert_eq!(zero.status.code(), Some(2));
}
