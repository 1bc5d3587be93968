use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use oscimax_cli::{
    list_experiments, resolve_args, run_experiment, Args, CliError, ExperimentConfig, ExperimentKind, EXIT_CHECK_FAILED,
    EXIT_PASS, EXIT_USAGE,
};

fn oscimax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oscimax")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn catalog_lists_eight_experiments_with_round_tripping_defaults() {
    let text = list_experiments();
    let names: Vec<&str> = text.lines().filter(|l| !l.starts_with(' ')).collect();
    assert_eq!(names.len(), 8);
    for kind in ExperimentKind::ALL {
        assert!(names.contains(&kind.name()));
        assert!(!kind.anchor().is_empty());
        let defaults = ExperimentConfig::defaults(kind);
        let json = serde_json::to_string(&defaults).unwrap();
        assert_eq!(ExperimentConfig::from_json(&json).unwrap(), defaults);
        assert_eq!(defaults.resolve(kind).unwrap().inner, defaults);
    }
    let out = oscimax(&["list"]);
    assert_eq!(code(&out), EXIT_PASS);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), text);
}

#[test]
fn partition_check_passes_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = oscimax(&["partition-check", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), EXIT_PASS);
    let mut reader = csv::Reader::from_path(out_dir.join("partition.csv")).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["u", "residual"]);
    let mut rows = 0;
    for record in reader.records() {
        let residual: f64 = record.unwrap()[1].parse().unwrap();
        assert!(residual <= 1e-12);
        rows += 1;
    }
    assert_eq!(rows, 10_000);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["pass"], true);
    assert_eq!(summary["config"]["levels"], 24);
    assert!(fs::read_to_string(out_dir.join("summary.txt")).unwrap().starts_with("# generated"));
}

#[test]
fn symbol_decay_reports_the_small_tau_slope() {
    let cfg = ExperimentConfig {
        alpha: Some(0.5),
        beta: Some(0.5),
        order: Some(0),
        ..Default::default()
    };
    let out = run_experiment(&cfg.resolve(ExperimentKind::SymbolDecay).unwrap()).unwrap();
    let slope = out.summary.check("small_tau_slope").unwrap();
    assert!((slope.measured + 0.5).abs() < 0.2);
    assert_eq!(slope.predicted, Some(-0.5));
    assert!(out.summary.pass);
    assert_eq!(out.tables[0].header, vec!["tau", "re", "im", "modulus", "error"]);
}

#[test]
fn rate_combo_below_threshold_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = oscimax(&["rate-combo", "--beta", "0.5", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), EXIT_USAGE);
    assert!(String::from_utf8_lossy(&out.stderr).contains("regularity threshold"));
}

#[test]
fn failing_check_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"tau_lo": 20, "tau_hi": 200}"#);
    let out_dir = dir.path().join("run");
    let out = oscimax(&["symbol-decay", "--config", &config, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), EXIT_CHECK_FAILED);
    assert!(String::from_utf8_lossy(&out.stderr).contains("small_tau_slope"));
    assert!(out_dir.join("summary.json").exists());
}

#[test]
fn config_keys_are_validated() {
    let dir = tempfile::tempdir().unwrap();
    for (text, needle) in [
        (r#"{"alpha": 0.5}"#, "does not use the key `alpha`"),
        (r#"{"levls": 3}"#, "unknown field"),
        (r#"{"experiment": "kernel-decay"}"#, "names experiment kernel-decay"),
        (r#"{"levels": 10}"#, "2^levels > u_max"),
    ] {
        let config = write_config(dir.path(), text);
        let out = oscimax(&["partition-check", "--config", &config, "--out", dir.path().to_str().unwrap()]);
        assert_eq!(code(&out), EXIT_USAGE, "{text}");
        assert!(String::from_utf8_lossy(&out.stderr).contains(needle), "{text}");
    }
    assert_eq!(code(&oscimax(&["no-such-experiment"])), EXIT_USAGE);
    assert_eq!(code(&oscimax(&["partition-check", "--alpha", "oops"])), EXIT_USAGE);
}

#[test]
fn flags_override_file_values() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"k": [3.0], "alpha": 0.4, "threshold": 0.01}"#);
    let args = Args {
        experiment: "rate-riesz".into(),
        config: Some(config.into()),
        alpha: None,
        beta: None,
        p: None,
        k: Some(vec![1.0, 2.5]),
        n_modes: Some(32),
        sigma: None,
        seed: None,
        out: None,
    };
    let cfg = resolve_args(&args).unwrap();
    assert_eq!(cfg.k(), vec![1.0, 2.5]);
    assert_eq!(cfg.alpha(), 0.4);
    assert_eq!(cfg.threshold(), 0.01);
    assert_eq!(cfg.n_modes(), 32);
    // Defaults are materialized.
    assert_eq!(cfg.envelope_k(), vec![1.0, 2.0]);
    assert_eq!(cfg.inner.beta, None);
}

#[test]
fn comma_separated_orders_reach_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = oscimax(&["rate-riesz", "--k", "1,3", "--n-modes", "32", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), EXIT_PASS, "{}", String::from_utf8_lossy(&out.stdout));
    assert!(out_dir.join("riesz_k1.csv").exists() && out_dir.join("riesz_k3.csv").exists());
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["k"], serde_json::json!([1.0, 3.0]));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        assert_eq!(code(&oscimax(&["maximal-sweep", "--seed", "9", "--out", d.to_str().unwrap()])), EXIT_PASS);
    }
    for name in ["maximal.csv", "summary.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let body = |d: &Path| {
        let text = fs::read_to_string(d.join("summary.txt")).unwrap();
        text.split_once('\n').unwrap().1.to_string()
    };
    assert_eq!(body(&a), body(&b));
}

#[test]
fn exit_codes_follow_error_kinds() {
    let conv = CliError::Numeric(oscimax::Error::Convergence {
        value: Default::default(),
        error_estimate: 1.0,
        panels: 10,
    });
    assert_eq!(conv.exit_code(), 3);
    assert_eq!(CliError::Numeric(oscimax::Error::Degenerate("x".into())).exit_code(), 1);
    assert_eq!(CliError::Numeric(oscimax::Error::Resolution("x".into())).exit_code(), 2);
    assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
}
