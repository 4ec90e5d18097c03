use std::path::Path;
use std::process::{Command, Output};

use homodyne::config::ExperimentConfig;
use homodyne::detector::{simulate_output_spectrum, DetectorSpec};
use homodyne::squeezing::{variance_law, write_pairs_csv};
use serde_json::Value;

fn homodyne(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_homodyne"))
        .args(args)
        .arg("--quiet")
        .arg("--out-dir")
        .arg(out_dir)
        .output()
        .unwrap()
}

fn error_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stdout);
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {text}"))
}

fn write_traces(dir: &Path) {
    let spec = DetectorSpec::reference_device();
    for (name, p) in [("shot.csv", 4.36), ("dark.csv", 0.0)] {
        let t = simulate_output_spectrum(&spec, p, |_| 1.0, name).unwrap();
        let f = std::fs::File::create(dir.join(name)).unwrap();
        t.write_csv(std::io::BufWriter::new(f)).unwrap();
    }
}

#[test]
fn missing_dark_trace_is_bad_input() {
    let tmp = tempfile::tempdir().unwrap();
    write_traces(tmp.path());
    let cfg = tmp.path().join("cfg.toml");
    std::fs::write(&cfg, "[inputs]\nshot_trace = \"shot.csv\"\n").unwrap();
    let out = homodyne(&["characterise", "--config", cfg.to_str().unwrap()], &tmp.path().join("run"));
    assert_eq!(out.status.code(), Some(2));
    let err = error_json(&out);
    assert_eq!(err["error"], "MissingInput");
    assert_eq!(err["exit_code"], 2);
    assert!(err["message"].as_str().unwrap().contains("dark"));
}

#[test]
fn nonexistent_input_path_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.toml");
    std::fs::write(&cfg, "[inputs]\nshot_trace = \"nope.csv\"\ndark_trace = \"nope2.csv\"\n").unwrap();
    let out = homodyne(&["characterise", "--config", cfg.to_str().unwrap()], &tmp.path().join("run"));
    assert_eq!(out.status.code(), Some(2));
    assert!(error_json(&out)["message"].as_str().unwrap().contains("inputs.shot_trace"));
}

#[test]
fn corrupt_trace_reports_line() {
    let tmp = tempfile::tempdir().unwrap();
    write_traces(tmp.path());
    let dark = tmp.path().join("dark.csv");
    let text = std::fs::read_to_string(&dark).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    lines[9] = "1.0e8,not-a-number".into();
    std::fs::write(&dark, lines.join("\n")).unwrap();
    let cfg = tmp.path().join("cfg.toml");
    std::fs::write(&cfg, "[inputs]\nshot_trace = \"shot.csv\"\ndark_trace = \"dark.csv\"\n").unwrap();
    let out = homodyne(&["characterise", "--config", cfg.to_str().unwrap()], &tmp.path().join("run"));
    assert_eq!(out.status.code(), Some(2));
    let err = error_json(&out);
    assert_eq!(err["error"], "Parse");
    assert!(err["message"].as_str().unwrap().contains("dark.csv:10:"), "{err}");
}

#[test]
fn single_pump_power_is_numerical_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let pairs = tmp.path().join("pairs.csv");
    let p = variance_law(0.28, 0.044, 50.0).unwrap();
    write_pairs_csv(std::fs::File::create(&pairs).unwrap(), &[p, p, p]).unwrap();
    let out = homodyne(&["fit-eq1", "--pairs", pairs.to_str().unwrap()], &tmp.path().join("run"));
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_json(&out)["error"], "Underdetermined");
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.toml");
    std::fs::write(&cfg, "[tomography]\ncutof = 6\n").unwrap();
    let out = homodyne(&["tomography", "--config", cfg.to_str().unwrap()], &tmp.path().join("run"));
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"], "Config");
}

#[test]
fn zero_threads_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = homodyne(&["fit-eq1", "--threads", "0"], &tmp.path().join("run"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fit_verb_writes_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    let out = homodyne(&["fit-eq1", "--seed", "5"], &run);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(run.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["command"], "fit-eq1");
    assert_eq!(summary["seed"], 5);
    let eta = summary["results"]["eta_hat"].as_f64().unwrap();
    assert!((eta - 0.28).abs() < 0.1, "{summary}");
    for f in ["pairs.csv", "fit.json", "run.log"] {
        assert!(run.join(f).exists(), "{f} missing");
    }
}

#[test]
fn config_round_trips_through_toml() {
    let mut cfg = ExperimentConfig { seed: 99, ..Default::default() };
    cfg.tomography.cutoff = 9;
    cfg.squeeze_scan.exclusions_hz.push([1e9, 1.1e9]);
    let text = cfg.to_toml_string().unwrap();
    let back = ExperimentConfig::from_toml_str(&text).unwrap();
    assert_eq!(cfg.snapshot(), back.snapshot());
}
