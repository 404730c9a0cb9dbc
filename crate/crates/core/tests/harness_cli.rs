use std::process::Command;

use cellfree::harness::{preset, run_experiment, ExperimentSpec, ResultTable, COST_COLUMNS, PRESETS, RUN_COLUMNS};
use cellfree::sim::Method;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cellfree"))
}

fn tiny_spec() -> ExperimentSpec {
    let mut spec = preset("fig8").unwrap();
    spec.grid = vec![2.0];
    spec.base.num_aps = 4;
    spec.base.num_users = 2;
    spec.n_drops = 2;
    spec.n_blocks = 100;
    spec
}

#[test]
fn run_from_config_writes_schema_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("spec.json");
    let out = dir.path().join("results.csv");
    std::fs::write(&cfg, serde_json::to_string_pretty(&tiny_spec()).unwrap()).unwrap();
    let status = bin()
        .args(["run", "--config", cfg.to_str().unwrap(), "--seed", "7", "--workers", "2", "--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());

    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), RUN_COLUMNS.join(","));
    let table = ResultTable::read_csv(text.as_bytes()).unwrap();
    // 2 drops x 2 users x 3 bounds.
    assert_eq!(table.rows.len(), 12);
    assert!(table.rows.iter().all(|r| r.seed == 7 && r.method == Method::Same && r.se_bits_per_hz.is_finite()));
}

#[test]
fn cli_output_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("spec.json");
    let out = dir.path().join("results.csv");
    let spec = tiny_spec();
    std::fs::write(&cfg, serde_json::to_string(&spec).unwrap()).unwrap();
    let status = bin().args(["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).status().unwrap();
    assert!(status.success());
    let lib = run_experiment(&spec, 1).unwrap().to_csv_bytes().unwrap();
    assert_eq!(std::fs::read(&out).unwrap(), lib);
}

#[test]
fn unknown_config_key_is_rejected() {
    let mut value = serde_json::to_value(tiny_spec()).unwrap();
    value["n_drop"] = serde_json::json!(3);
    let err = ExperimentSpec::from_json(&value.to_string()).unwrap_err();
    assert!(err.to_string().contains("n_drop"), "{err}");

    let mut value = serde_json::to_value(tiny_spec()).unwrap();
    value["base"]["antennas"] = serde_json::json!(3);
    assert!(ExperimentSpec::from_json(&value.to_string()).is_err());

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"preset": "x", "bogus": 1}"#).unwrap();
    let output = bin().args(["run", "--config", cfg.to_str().unwrap()]).output().unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("bogus"));
}

#[test]
fn cost_subcommand_prints_reference_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cost.json");
    std::fs::write(&cfg, r#"{"L": 20, "N": 4, "M": 2, "K": 5, "tau_p": 5, "tau_c": 200}"#).unwrap();
    let output = bin().args(["cost", "--config", cfg.to_str().unwrap()]).output().unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let text = String::from_utf8(output.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], COST_COLUMNS.join(","));
    assert_eq!(lines[1], "20,4,2,5,5,200,420,215840,40,780");
}

#[test]
fn list_presets_names_every_preset() {
    let output = bin().arg("list-presets").output().unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    for (name, _) in PRESETS {
        assert!(text.contains(name), "missing {name}");
    }
}

#[test]
fn unknown_preset_fails_cleanly() {
    let output = bin().args(["run", "--preset", "fig99"]).output().unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("fig8"));
}
