use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fock_interfere::scenario::{ScenarioConfig, SCENARIOS};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fock-interfere"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run_config(text: &str, dir: &Path) -> Output {
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    bin().args(["run", path.to_str().unwrap(), "--out", dir.join("out").to_str().unwrap()]).output().unwrap()
}

#[test]
fn every_scenario_has_a_config_that_round_trips() {
    for (name, _) in SCENARIOS {
        let text = fs::read_to_string(configs().join(format!("{name}.toml"))).unwrap();
        let parsed = ScenarioConfig::from_toml(&text).unwrap();
        assert_eq!(&parsed.scenario, name);
        assert_eq!(ScenarioConfig::from_toml(&parsed.to_toml()).unwrap(), parsed);
    }
}

#[test]
fn list_scenarios_names_every_scenario() {
    let out = bin().arg("list-scenarios").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for (name, _) in SCENARIOS {
        assert!(text.contains(name), "{name}");
    }
}

#[test]
fn seed_override_changes_counts_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = configs().join("hom-dip.toml");
    let run = |seed: &str, sub: &str| {
        let out = dir.path().join(sub);
        let status = bin()
            .args(["run", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", seed])
            .status()
            .unwrap();
        assert!(status.success());
        fs::read(out.join("hom-dip_counts.csv")).unwrap()
    };
    let (a, b, c) = (run("1", "a"), run("1", "b"), run("2", "c"));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn json_format_writes_a_single_document() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("json");
    let status = bin()
        .args(["run", configs().join("double-well.toml").to_str().unwrap(), "--out", out.to_str().unwrap(), "--format", "json"])
        .status()
        .unwrap();
    assert!(status.success());
    let doc: serde_json::Value = serde_json::from_slice(&fs::read(out.join("double-well.json")).unwrap()).unwrap();
    assert_eq!(doc["scenario"], "double-well");
}

#[test]
fn invalid_configs_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    for text in [
        "scenario = \"hom-dip\"\n[params]\nr = 1.5\n",
        "scenario = \"hom-dip\"\n[params]\nreflectivity = 0.5\n",
        "scenario = \"no-such-scenario\"\n",
        "scenario = \"lmg-sweep\"\n[params]\nn = 7\n",
        "scenario = \"distribution\"\n[params]\ninput = [1, 1]\n[sampling]\nshots = 10\n",
    ] {
        let out = run_config(text, dir.path());
        assert_eq!(out.status.code(), Some(2), "{text}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
}

#[test]
fn dimension_cap_exits_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config("scenario = \"distribution\"\n[params]\ninput = [40, 40, 40, 40, 40, 40, 40, 40]\nnetwork = \"fourier\"\n", dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_config_file_is_an_io_error() {
    let out = bin().args(["run", "/nonexistent/config.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bench_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["bench", "permanent", "--max-n", "12", "--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("bench_permanent.csv")).unwrap();
    assert!(text.starts_with("n,seconds,abs_permanent"));
    assert_eq!(text.lines().count(), 13);
    let bad = bin().args(["bench", "permanent", "--max-n", "0"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
