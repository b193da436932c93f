use std::path::Path;
use std::process::{Command, Output};

use coxbo::pointprocess::{thinning_sample, IntensityFunction, SyntheticIntensity};
use coxbo_cli::ingest::{events_csv, ingest_events};
use coxbo_cli::{cmd_synth, ExperimentConfig};

fn coxbo(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coxbo")).args(args).current_dir(dir).output().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn fit_writes_the_result_schema() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "synthetic = 1\n").unwrap();
    let out = coxbo(&["fit", "--config", "c.toml", "--out", "r.json", "--csv", "r.csv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&dir.path().join("r.json"));
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    let mut expected = vec!["config", "grid", "mean", "std", "metrics", "trace", "timing_seconds"];
    expected.sort();
    let mut keys = keys;
    keys.sort();
    assert_eq!(keys, expected);
    for key in ["l2", "iql50", "iql85"] {
        assert!(v["metrics"][key].as_f64().unwrap().is_finite(), "{key}");
    }
    assert_eq!(v["mean"].as_array().unwrap().len(), 100);
    assert_eq!(v["std"].as_array().unwrap().len(), 100);
    assert_eq!(v["grid"]["points"].as_array().unwrap().len(), 100);
    let csv = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x0,mean,std"));
    assert_eq!(csv.lines().count(), 101);
}

#[test]
fn metrics_subcommand_agrees_with_fit() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "synthetic = 2\nseed = 5\n").unwrap();
    std::fs::write(dir.path().join("m.toml"), "synthetic = 2\nresult = \"r.json\"\n").unwrap();
    assert!(coxbo(&["fit", "--config", "c.toml", "--out", "r.json"], dir.path()).status.success());
    let out = coxbo(&["metrics", "--config", "m.toml"], dir.path());
    assert!(out.status.success());
    let m: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let r = json(&dir.path().join("r.json"));
    for key in ["l2", "iql50", "iql85"] {
        assert_eq!(m[key], r["metrics"][key], "{key}");
    }
}

#[test]
fn synth_output_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "synthetic = 3\n").unwrap();
    let out = coxbo(&["synth", "--config", "c.toml", "--seed", "12", "--out", "e.csv"], dir.path());
    assert!(out.status.success());
    let expected = thinning_sample(&SyntheticIntensity::Lambda3.intensity(), 12).unwrap();
    let back = ingest_events(&dir.path().join("e.csv"), Some((&[0.0], &[100.0]))).unwrap();
    assert_eq!(back, expected);
    assert_eq!(std::fs::read_to_string(dir.path().join("e.csv")).unwrap(), events_csv(&expected));
}

#[test]
fn synth_replicates_write_one_file_each() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "synthetic = 1\n").unwrap();
    let out = coxbo(&["synth", "--config", "c.toml", "--replicates", "3", "--out", "e.csv"], dir.path());
    assert!(out.status.success());
    for r in 0..3 {
        assert!(dir.path().join(format!("e_{r}.csv")).exists());
    }
}

#[test]
fn synth_counts_match_the_integral() {
    let cfg = ExperimentConfig { synthetic: Some(2), replicates: 500, ..ExperimentConfig::default() };
    let samples = cmd_synth(&cfg).unwrap();
    let expected = SyntheticIntensity::Lambda2.intensity().integral(4096).unwrap();
    let mean = samples.iter().map(|e| e.len() as f64).sum::<f64>() / 500.0;
    assert!((mean - expected).abs() <= 3.0 * (expected / 500.0).sqrt(), "{mean} vs {expected}");
}

#[test]
fn bo_emits_one_record_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let bump = IntensityFunction::new(|t| 0.2 + 8.0 * (-((t[0] - 80.0) / 3.0).powi(2)).exp(), 8.2, vec![0.0], vec![100.0])
        .unwrap();
    std::fs::write(dir.path().join("e.csv"), events_csv(&thinning_sample(&bump, 1).unwrap())).unwrap();
    std::fs::write(
        dir.path().join("c.toml"),
        "data = \"e.csv\"\nlower = [0.0]\nupper = [100.0]\nbudget = 25\nradius = 2.0\ninitial_centers = [[25.0], [60.0]]\n",
    )
    .unwrap();
    let out = coxbo(&["bo", "--config", "c.toml", "--out", "r.json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&dir.path().join("r.json"));
    assert_eq!(v["trace"]["steps"].as_array().unwrap().len(), 25);
    assert!(v["metrics"].is_null());
    let trace = json(&dir.path().join("r.trace.json"));
    let steps = trace["steps"].as_array().unwrap();
    assert_eq!(steps.len(), 25);
    assert_eq!(steps[0]["mean_g"].as_array().unwrap().len(), 100);
    // The second step sees the first step's region as explored.
    let first = steps[0]["selected"].as_u64().unwrap() as usize;
    assert!(steps[1]["scores"][first].is_null());
}

fn expect_error(config: &str, files: &[(&str, &str)], category: &str) {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), config).unwrap();
    for (name, body) in files {
        std::fs::write(dir.path().join(name), body).unwrap();
    }
    let out = coxbo(&["fit", "--config", "c.toml"], dir.path());
    assert!(!out.status.success(), "{config}");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with(&format!("error[{category}]")), "{config}: {stderr}");
}

#[test]
fn errors_exit_nonzero_with_a_category() {
    expect_error("colour = 1\n", &[], "config");
    expect_error("data = \"missing.csv\"\n", &[], "io");
    expect_error("data = \"e.csv\"\n", &[("e.csv", "a,b\n")], "parse");
    expect_error("data = \"e.csv\"\n", &[("e.csv", "")], "input");
    expect_error("data = \"e.csv\"\nlower = [0.0]\nupper = [1.0]\n", &[("e.csv", "0.5\n2.0\n")], "input");
    expect_error("synthetic = 1\nmax_iters = 0\n", &[], "input");
    let dir = tempfile::tempdir().unwrap();
    let out = coxbo(&["fit", "--config", "nope.toml"], dir.path());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[io]"));
}

#[test]
fn usage_errors_go_through_clap() {
    let dir = tempfile::tempdir().unwrap();
    let help = coxbo(&["--help"], dir.path());
    assert!(help.status.success());
    assert!(String::from_utf8_lossy(&help.stdout).contains("synth"));
    let bad = coxbo(&["fit", "--colour"], dir.path());
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn library_entry_point_matches_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "synthetic = 3
seed = 2
").unwrap();
    let config = dir.path().join("c.toml");
    let mut stdout = Vec::new();
    coxbo_cli::run(["coxbo", "synth", "--config", config.to_str().unwrap()], &mut stdout).unwrap();
    let out = coxbo(&["synth", "--config", "c.toml"], dir.path());
    assert_eq!(stdout, out.stdout);
}

#[test]
fn data_domain_is_padded() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("e.csv"), "t\n10\n20\n30\n").unwrap();
    std::fs::write(dir.path().join("c.toml"), "data = \"e.csv\"\ngrid_points = [20]\n").unwrap();
    let out = coxbo(&["fit", "--config", "c.toml"], dir.path());
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["grid"]["lower"][0].as_f64().unwrap(), 9.8);
    assert_eq!(v["grid"]["upper"][0].as_f64().unwrap(), 30.2);
}
