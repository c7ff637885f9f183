use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const GOLDEN_HEADER: &str = "t,q_1,q_2,q_d_1,q_d_2,e_1,e_2,e_norm,r_1,r_2,\
theta_hat_1,theta_hat_2,theta_hat_3,theta_hat_4,theta_hat_5,\
theta_err_1,theta_err_2,theta_err_3,theta_err_4,theta_err_5,theta_err_norm,\
tau_1,tau_2,tau_d_1,tau_d_2,tau_d_hat_1,tau_d_hat_2,tau_d_err_1,tau_d_err_2,tau_d_err_norm,\
delta,ycal_1,ycal_2,ycal_3,ycal_4,ycal_5,wcal_1,wcal_2,wcal_3,wcal_4,wcal_5,\
lyapunov,f_n_1,f_n_2,lambda_1,lambda_2,int_delta_sq,int_lambda_sq";

fn ivdrem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ivdrem"))
        .args(args)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Short run (the window shrinks with the config so every stage is active).
fn short_run(dir: &Path, extra: &[&str]) -> Output {
    let cfg = dir.join("short.json");
    std::fs::write(&cfg, r#"{"T": 0.5, "decimation": 5}"#).unwrap();
    let out = dir.join("out");
    let mut args = vec![
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--t-end",
        "1",
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    ivdrem(&args)
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn trace_header_is_stable() {
    let dir = TempDir::new().unwrap();
    let o = short_run(dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let trace = std::fs::read_to_string(dir.path().join("out/trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next().unwrap(), GOLDEN_HEADER);
    let width = GOLDEN_HEADER.split(',').count();
    // 1 s at h = 1 ms sampled every 5 steps, both ends included
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 201);
    assert!(rows.iter().all(|r| r.split(',').count() == width));
    assert!(rows[0].starts_with("0,0,0.9424777960769379,"));
    assert!(rows[200].starts_with("1,"));
    // every value parses back
    for field in rows.iter().flat_map(|r| r.split(',')) {
        field.parse::<f64>().unwrap();
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let o = short_run(dir.path(), &["--law", "baseline"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let first = std::fs::read(dir.path().join("out/trace.csv")).unwrap();
    let metrics = std::fs::read(dir.path().join("out/metrics.json")).unwrap();
    let o = short_run(dir.path(), &["--law", "baseline"]);
    assert!(o.status.success());
    assert_eq!(
        first,
        std::fs::read(dir.path().join("out/trace.csv")).unwrap()
    );
    assert_eq!(
        metrics,
        std::fs::read(dir.path().join("out/metrics.json")).unwrap()
    );
}

#[test]
fn artifacts_describe_the_run() {
    let dir = TempDir::new().unwrap();
    let o = short_run(dir.path(), &["--law", "none", "--disturbance", "off"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("law none"), "{stdout}");
    assert!(stdout.contains("mean |e|") && stdout.contains("int Delta^2 by quarter"));
    let m: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("out/metrics.json")).unwrap())
            .unwrap();
    assert_eq!(m["law"], "none");
    assert_eq!(m["t_end"], 1.0);
    assert_eq!(m["steps"], 1000);
    // estimate frozen at zero
    assert_eq!(
        m["theta_hat_final"],
        serde_json::json!([0.0, 0.0, 0.0, 0.0, 0.0])
    );
    let c: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("out/conditions.json")).unwrap())
            .unwrap();
    assert_eq!(c["all_finite"], true);
    // without disturbance the disturbance column is identically zero
    let trace = std::fs::read_to_string(dir.path().join("out/trace.csv")).unwrap();
    let col = GOLDEN_HEADER
        .split(',')
        .position(|c| c == "tau_d_1")
        .unwrap();
    assert!(trace
        .lines()
        .skip(1)
        .all(|r| r.split(',').nth(col) == Some("0")));
}

#[test]
fn empty_config_and_printed_preset_reproduce_the_preset() {
    let dir = TempDir::new().unwrap();
    let shown = ivdrem(&["presets", "--show", "paper2dof"]);
    assert!(shown.status.success());
    let full: Value = serde_json::from_slice(&shown.stdout).unwrap();
    assert_eq!(
        full["theta"],
        serde_json::json!([1.3, 0.28, 0.32, 0.4, 1.4])
    );
    assert_eq!(full["k"], serde_json::json!([2.0, 2.0]));
    assert_eq!(full["l"], 50.0);
    assert_eq!(full["p"], 2.0);
    assert_eq!(full["T"], 20.0);
    assert_eq!(full["delta_mu"], 0.8);
    assert_eq!(
        full["gamma"],
        serde_json::json!([0.01, 0.01, 0.01, 0.01, 0.01])
    );
    assert_eq!(full["gamma_proposed"], 1e10);
    assert_eq!(full["gamma_baseline"], 1.0);
    assert_eq!(
        full["weight"],
        serde_json::json!({"kind": "affine", "mu0": 1.0, "mu1": 15.0})
    );

    let empty = write(dir.path(), "empty.json", "");
    let printed = write(
        dir.path(),
        "full.json",
        &String::from_utf8_lossy(&shown.stdout),
    );
    let mut traces = Vec::new();
    for cfg in [None, Some(empty.as_str()), Some(printed.as_str())] {
        let out = dir.path().join(format!("run{}", traces.len()));
        let mut args = vec!["run", "--t-end", "0.5", "--out", out.to_str().unwrap()];
        if let Some(c) = cfg {
            args.extend(["--config", c]);
        }
        let o = ivdrem(&args);
        assert!(o.status.success(), "{}", stderr(&o));
        traces.push(std::fs::read(out.join("trace.csv")).unwrap());
    }
    assert_eq!(traces[0], traces[1]);
    assert_eq!(traces[0], traces[2]);
}

#[test]
fn invalid_configs_are_rejected_before_running() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("never");
    let run_with = |text: &str| {
        let cfg = write(dir.path(), "cfg.json", text);
        ivdrem(&["run", "--config", &cfg, "--out", out.to_str().unwrap()])
    };

    let o = run_with(r#"{"delta_mu": 1.5}"#);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("delta_mu must lie in (0,1)"),
        "{}",
        stderr(&o)
    );

    let o = run_with(r#"{"T": 20, "h": 3e-3}"#);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("T must be an integer multiple of h"),
        "{}",
        stderr(&o)
    );

    let o = run_with("{\n  \"l\": 50,\n  \"gama\": 1\n}");
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("unknown field `gama`") && stderr(&o).contains("line 3"),
        "{}",
        stderr(&o)
    );

    let o = run_with("{\"alpha\": }");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));

    let o = run_with(r#"{"theta": [1, 2, 3]}"#);
    assert_eq!(o.status.code(), Some(2));

    let o = ivdrem(&["run", "--preset", "nope", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("unknown preset \"nope\""),
        "{}",
        stderr(&o)
    );

    assert!(!out.exists(), "no artifacts on configuration errors");
}

#[test]
fn divergence_is_reported_with_its_own_status() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "wild.json", r#"{"gamma": 1e4, "T": 0.5}"#);
    let out = dir.path().join("out");
    let o = ivdrem(&[
        "run",
        "--config",
        &cfg,
        "--t-end",
        "20",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("diverged"));
}

#[test]
fn comparison_flags_winners_and_self_comparison_ties() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "short.json", r#"{"T": 0.5}"#);
    let run_law = |law: &str| {
        let out = dir.path().join(law);
        let o = ivdrem(&[
            "run",
            "--config",
            &cfg,
            "--t-end",
            "2",
            "--law",
            law,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        out.to_str().unwrap().to_string()
    };
    let (a, b) = (run_law("proposed"), run_law("none"));

    let o = ivdrem(&["compare", &a, &a]);
    assert!(o.status.success());
    let table = String::from_utf8_lossy(&o.stdout).into_owned();
    let rows: Vec<_> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
    assert!(
        rows.iter()
            .all(|r| r.ends_with("tie") && r.contains(" 0.000e0 ")),
        "{table}"
    );

    let o = ivdrem(&["compare", &a, &b]);
    assert!(o.status.success());
    let table = String::from_utf8_lossy(&o.stdout).into_owned();
    assert!(table.lines().next().unwrap().contains("A (proposed)") && table.contains("B (none)"));
    let winners: Vec<_> = table
        .lines()
        .skip(1)
        .map(|r| r.rsplit("  ").next().unwrap().to_string())
        .collect();
    assert!(
        winners
            .iter()
            .all(|w| ["A (proposed)", "B (none)", "tie"].contains(&w.as_str())),
        "{table}"
    );
    // the adapting law already lowers the mean parameter error
    assert_eq!(winners[2], "A (proposed)", "{table}");

    let o = ivdrem(&["compare", &a, dir.path().join("missing").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("metrics.json"));

    // different horizons are not comparable
    let out = dir.path().join("longer");
    let o = ivdrem(&[
        "run",
        "--config",
        &cfg,
        "--t-end",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let o = ivdrem(&["compare", &a, out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("incompatible runs: t_end"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn presets_are_listed() {
    let o = ivdrem(&["presets"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("paper2dof "));
    let o = ivdrem(&["presets", "--show", "other"]);
    assert_eq!(o.status.code(), Some(2));
}
