use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sparsezest"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_writes_series_csv() {
    let out = run(&["simulate", "--case", "case1", "--n", "50", "--seed", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,x1");
    assert!(lines.next().unwrap().starts_with("-10,"));
    assert_eq!(text.lines().count(), 1 + 10 + 50);
}

#[test]
fn fit_and_cv_on_a_saved_series() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("s.csv");
    let s = series.to_str().unwrap();
    assert!(run(&["simulate", "--n", "1500", "--seed", "8", "--out", s]).status.success());

    let fit_path = dir.path().join("fit.json");
    let out = run(&["fit", "--series", s, "--lambda", "0.2", "--out", fit_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let fit = json(&fit_path);
    assert_eq!(fit["schema"], 1);
    assert_eq!(fit["lambda"], 0.2);
    assert_eq!(fit["two_step"]["support"][0], 0);
    assert_eq!(fit["first_step"]["status"], "optimal");

    let out = run(&["cv", "--series", s]);
    assert!(out.status.success());
    let cv: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cv["cv"]["grid"].as_array().unwrap().len(), 20);
    assert_eq!(cv["cv"]["folds"], 5);
}

#[test]
fn experiment_outputs_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let (a, b, hist, reps) = (p("a.json"), p("b.json"), p("h.csv"), p("r.csv"));
    let base = ["experiment", "--case", "case1", "--n", "400", "--reps", "6", "--seed", "5"];
    let mut args: Vec<&str> = base.to_vec();
    args.extend(["--jobs", "1", "--out", &a, "--hist", &hist, "--csv", &reps]);
    assert!(run(&args).status.success());
    let mut args: Vec<&str> = base.to_vec();
    args.extend(["--jobs", "3", "--out", &b]);
    assert!(run(&args).status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let report = json(Path::new(&a));
    assert_eq!(report["schema"], 1);
    assert_eq!(report["records"].as_array().unwrap().len(), 6);
    assert_eq!(report["base_seed"], 5);
    let csv = fs::read_to_string(&reps).unwrap();
    assert!(csv.starts_with("rep,linf1,l21,sel,linf2,l22,proj_stat,failed\n"));
    assert!(fs::read_to_string(&hist).unwrap().starts_with("bin_left,bin_right,count\n"));
}

#[test]
fn finfty_verb() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("m.json");
    fs::write(&cfg, r#"{"matrix": [[1.0, 0.0], [0.0, 1.0]], "support": [0], "samples": 500}"#).unwrap();
    let out = run(&["finfty", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["grid"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-4);
    assert!(v["sampled"]["value"].as_f64().unwrap() >= 1.0 - 1e-12);
}

#[test]
fn hawkes_support_verb() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("h.json");
    fs::write(
        &cfg,
        r#"{"case_id": "hawkes", "n": 0, "p": 20, "reps": 2,
            "lambda_mode": {"type": "fixed", "value": 0.02},
            "model": {"type": "hawkes", "delta": 0.1, "order": 20,
                      "spec": {"eta": 1.0, "horizon": 500.0,
                               "kernel": {"breakpoints": [0.0, 1.0], "values": [0.8]}}}}"#,
    )
    .unwrap();
    let out = run(&["hawkes-support", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["records"].as_array().unwrap().len(), 2);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    assert_eq!(run(&["experiment", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["experiment", "--config", "/nonexistent/cfg.json"]).status.code(), Some(2));
    assert_eq!(run(&["experiment", "--reps", "0"]).status.code(), Some(2));
    assert_eq!(run(&["experiment", "--jobs", "0", "--n", "100", "--reps", "1"]).status.code(), Some(2));
    assert_eq!(run(&["bogus-verb"]).status.code(), Some(2));
    let short = dir.path().join("short.json");
    fs::write(
        &short,
        r#"{"case_id": "custom", "n": 100, "p": 2, "reps": 1,
            "lambda_mode": {"type": "fixed", "value": 0.1},
            "model": {"type": "minar", "target": 0,
                      "spec": {"eta": [0.5, 0.5], "a_matrix": {"rows": 2, "cols": 2, "data": [0.3, 0.1, 0.0]}}}}"#,
    )
    .unwrap();
    assert_eq!(run(&["experiment", "--config", short.to_str().unwrap()]).status.code(), Some(2));
    let ragged = dir.path().join("ragged.json");
    fs::write(
        &ragged,
        r#"{"case_id": "custom", "n": 100, "p": 2, "reps": 1,
            "lambda_mode": {"type": "fixed", "value": 0.1},
            "model": {"type": "minar", "target": 0,
                      "spec": {"eta": [0.5, 0.5], "a_matrix": {"rows": 2, "cols": 3, "data": [0.3, 0.1, 0.0, 0.0, 0.0, 0.2]}}}}"#,
    )
    .unwrap();
    assert_eq!(run(&["experiment", "--config", ragged.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn numeric_failures_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("explosive.json");
    fs::write(
        &cfg,
        r#"{"case_id": "custom", "n": 100, "p": 2, "reps": 1,
            "lambda_mode": {"type": "fixed", "value": 0.1},
            "model": {"type": "inar", "spec": {"mu_eps": 0.5, "alpha": [0.7, 0.5]}}}"#,
    )
    .unwrap();
    let out = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
