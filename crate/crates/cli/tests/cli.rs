use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gfou_cli::ExperimentConfig;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn gfou(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gfou"));
    cmd.args(args).env_remove("GFOU_OUT_DIR");
    if let Some(d) = env_out {
        cmd.env("GFOU_OUT_DIR", d);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

const STATIONARY: &str = r#"
seed = 5
reps = 400

[process]
kind = "gfou"
hurst = 0.7
horizon = 2.0
mesh = 0.015625

[process.levy]
gaussian_a = 1.0
drift = 1.5

[process.initial]
kind = "stationary"
truncation = 15.0
"#;

#[test]
fn shipped_configs_parse() {
    let mut n = 0;
    for entry in fs::read_dir(configs()).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            ExperimentConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            n += 1;
        }
    }
    assert!(n >= 5);
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &format!("{STATIONARY}\nspurious = 1\n"));
    let o = gfou(&["simulate", "--config", &cfg, "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));

    let nested = STATIONARY.replace("truncation = 15.0", "truncation = 15.0\nwidth = 2");
    let cfg = write_config(dir.path(), "bad2.toml", &nested);
    assert_eq!(code(&gfou(&["gate", "--config", &cfg], None)), 4);

    let cfg = write_config(dir.path(), "bad3.toml", &STATIONARY.replace("mesh = 0.015625", "mesh = 0.3"));
    assert_eq!(code(&gfou(&["gate", "--config", &cfg], None)), 4);
    assert_eq!(code(&gfou(&["gate", "--config", "/nonexistent/x.toml"], None)), 4);
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("fou.toml");
    let cfg = cfg.to_str().unwrap();
    let run = |sub: &str, seed: &str| -> Vec<u8> {
        let out = dir.path().join(sub);
        let o = gfou(&["simulate", "--config", cfg, "--seed", seed, "--out", out.to_str().unwrap()], None);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(out.join("paths.csv")).unwrap()
    };
    let a = run("a", "7");
    let b = run("b", "7");
    let c = run("c", "8");
    assert_eq!(a, b);
    assert_ne!(a, c);

    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config_hash="));
    assert_eq!(lines.next().unwrap(), "rep,t,value");
    // 10 reps on 641 grid points
    assert_eq!(lines.count(), 10 * 641);
    let summary = fs::read_to_string(dir.path().join("a/summary.csv")).unwrap();
    assert!(summary.lines().nth(1).unwrap().starts_with("t,mean,var,n"));
}

#[test]
fn job_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("fou.toml");
    let run = |jobs: &str| -> Vec<u8> {
        let out = dir.path().join(jobs);
        let o = gfou(
            &["simulate", "--config", cfg.to_str().unwrap(), "--jobs", jobs, "--out", out.to_str().unwrap()],
            None,
        );
        assert_eq!(code(&o), 0);
        fs::read(out.join("paths.csv")).unwrap()
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn output_directory_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let env_dir = dir.path().join("from-env");
    let cfg = configs().join("fou.toml");
    let o = gfou(&["simulate", "--config", cfg.to_str().unwrap(), "--reps", "2"], Some(&env_dir));
    assert_eq!(code(&o), 0);
    assert!(env_dir.join("paths.csv").exists());

    let file_dir = dir.path().join("from-file");
    let text = format!("out_dir = {:?}\n{}", file_dir.to_str().unwrap(), fs::read_to_string(&cfg).unwrap());
    let with_dir = write_config(dir.path(), "with_dir.toml", &text);
    let o = gfou(&["simulate", "--config", &with_dir, "--reps", "2"], Some(&env_dir));
    assert_eq!(code(&o), 0);
    assert!(file_dir.join("paths.csv").exists());

    let flag_dir = dir.path().join("from-flag");
    let o = gfou(
        &["simulate", "--config", &with_dir, "--reps", "2", "--out", flag_dir.to_str().unwrap()],
        Some(&env_dir),
    );
    assert_eq!(code(&o), 0);
    assert!(flag_dir.join("paths.csv").exists());

    // moving the output does not change the config hash
    let header = |d: &Path| fs::read_to_string(d.join("paths.csv")).unwrap().lines().next().unwrap().to_owned();
    assert_eq!(header(&file_dir), header(&flag_dir));
}

#[test]
fn gates_exit_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let stable = configs().join("gate_stable.toml");
    let o = gfou(&["gate", "--config", stable.to_str().unwrap()], None);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("1/(1-H)"));
    let out = dir.path().join("sim");
    let o = gfou(&["simulate", "--config", stable.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert_eq!(code(&o), 3);
    assert!(!out.join("paths.csv").exists());

    // xi_t = 0.5 t + W_t has theta2 = 2(0.5) - 2 = -1
    let neg = STATIONARY.replace("drift = 1.5", "drift = 0.5");
    let cfg = write_config(dir.path(), "neg.toml", &neg);
    let o = gfou(&["gate", "--config", &cfg], None);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("theta2"));

    let cfg = write_config(dir.path(), "ok.toml", STATIONARY);
    let o = gfou(&["gate", "--config", &cfg], None);
    assert_eq!(code(&o), 0);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["existence"]["ok"], true);
    assert!((report["theta"][0].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((report["theta"][1].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn validate_cov_analytic_columns_agree() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{}\n[validation]\nmc = false\n", STATIONARY.replace("horizon = 2.0", "horizon = 10.0"));
    let cfg = write_config(dir.path(), "v.toml", &text);
    let out = dir.path().join("out");
    let o = gfou(&["validate-cov", "--config", &cfg, "--out", out.to_str().unwrap()], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = summary["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    for r in rows {
        assert_eq!(r["closed_vs_oracle"], true, "{r}");
        assert_eq!(r["mc_vs_closed"], true);
    }
    let csv = fs::read_to_string(out.join("covariance.csv")).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap(), "s,analytic,series,oracle,mc,mc_stderr");
    assert_eq!(csv.lines().count(), 7);
    assert!(out.join("covariance.json").exists());

    // an absurd tolerance makes the analytic comparison fail with code 2
    let o = gfou(&["validate-cov", "--config", &cfg, "--out", out.to_str().unwrap(), "--tolerance", "1e-16"], None);
    assert_eq!(code(&o), 2);
}

#[test]
fn validate_cov_negative_control() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "{}\n[validation]\nlags = [0.5, 1.0]\n\n[validation.theta_override]\ntheta1 = 1.0\ntheta2 = 3.0\n",
        STATIONARY
    );
    let cfg = write_config(dir.path(), "v.toml", &text);
    let o = gfou(&["validate-cov", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = summary["rows"].as_array().unwrap();
    assert!(rows.iter().all(|r| r["closed_vs_oracle"] == true));
    assert!(rows.iter().any(|r| r["mc_vs_closed"] == false), "{rows:?}");
}

#[test]
fn hurst_writes_per_rep_estimates() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
seed = 2
reps = 3

[process]
kind = "fbm"
hurst = 0.7
horizon = 4096.0
mesh = 1.0

[hurst]
bootstrap = 10
"#;
    let cfg = write_config(dir.path(), "h.toml", text);
    let o = gfou(&["hurst", "--config", &cfg, "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("hurst.csv")).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap(), "rep,method,estimate,stderr,ci_low,ci_high,n");
    assert_eq!(csv.lines().count(), 2 + 3 * 2);
    for line in csv.lines().skip(2) {
        let h: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!((0.55..0.85).contains(&h), "{line}");
    }
}

#[test]
fn hurst_detects_long_memory_in_stationary_gfou() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
seed = 9
reps = 4

[process]
kind = "gfou"
hurst = 0.7
horizon = 4096.0
mesh = 1.0

[process.levy]
gaussian_a = 1.0
drift = 1.5

[process.initial]
kind = "stationary"

[output]
write_paths = false

[hurst]
input = "values"
methods = ["variance-time", "rs"]
bootstrap = 10
"#;
    let cfg = write_config(dir.path(), "g.toml", text);
    let o = gfou(&["hurst", "--config", &cfg, "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for agg in s["aggregate"].as_array().unwrap() {
        let mean = agg[1].as_f64().unwrap();
        assert!((0.6..=0.8).contains(&mean), "{agg}");
    }
}
