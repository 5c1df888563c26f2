use std::path::Path;
use std::process::Command;

use robcon_cli::{run, sweep, write_sweep_csv, ExperimentConfig, Mode, SweepGrid};

fn config(json: &str, out: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::from_json(json).unwrap();
    c.output_dir = out.to_path_buf();
    c
}

const UQSC: &str =
    r#"{"kind": "random_uqsc", "n": 4, "window": 4.0, "tau_d": 0.5, "horizon": 40.0, "seed": 3}"#;

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn certify_only_writes_all_constants_and_no_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        &format!(r#"{{"scenario": {{"generator": {UQSC}}}, "mode": "certify_only"}}"#),
        dir.path(),
    );
    let outcome = run(&c).unwrap();
    assert!(outcome.ok());
    let cert: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "certificate.json")).unwrap();
    for key in [
        "xi",
        "ln_xi",
        "lambda0",
        "k0",
        "t_hat",
        "gamma_gain",
        "xi_star",
        "usc_gamma_gain",
    ] {
        assert!(cert["grc"].get(key).is_some(), "missing {key}");
    }
    assert_eq!(cert["window_source"], "declared");
    assert!(!dir.path().join("trajectory.csv").exists());
    assert_eq!(outcome.report.convergence.len(), 3);
}

#[test]
fn example_one_with_integrable_noise_has_no_violations_and_reproduces() {
    let json = r#"{
        "scenario": {"generator": {"kind": "example_one", "horizon": 120.0}},
        "mode": "simulate",
        "disturbance": {"kind": "integrable_decay", "amplitude": [0.3, -0.2], "power": 2.0, "classes": ["F2"]}
    }"#;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let outcome = run(&config(json, a.path())).unwrap();
    run(&config(json, b.path())).unwrap();
    assert_eq!(outcome.report.violations, 0, "{:?}", outcome.report.checks);
    let names: Vec<&str> = outcome
        .report
        .checks
        .iter()
        .map(|c| c.name.as_str())
        .collect();
    assert!(names.contains(&"girc") && names.contains(&"girc_sharpened"));
    for f in [
        "trajectory.csv",
        "metrics.csv",
        "certificate.json",
        "report.json",
        "summary.txt",
    ] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f} differs");
    }
    assert!(read(a.path(), "metrics.csv").starts_with("t,max,min,H,bound\n"));
    let summary = read(a.path(), "summary.txt");
    for c in &outcome.report.checks {
        assert!(summary.contains(&format!("check {}: {} violations", c.name, c.violations)));
    }
    assert!(summary.contains("total violations: 0"));
}

#[test]
fn malformed_scenario_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = robcon::scenarios::example_one(20.0).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&scenario.to_json()).unwrap();
    doc["wieghts"] = doc["weights"].clone();
    std::fs::write(dir.path().join("bad.json"), doc.to_string()).unwrap();
    std::fs::write(
        dir.path().join("config.json"),
        r#"{"scenario": {"file": "bad.json"}, "mode": "simulate"}"#,
    )
    .unwrap();
    let c = ExperimentConfig::load(&dir.path().join("config.json")).unwrap();
    let err = format!("{:#}", c.resolve_scenario().unwrap_err());
    assert!(err.contains("wieghts"), "{err}");

    let missing = ExperimentConfig::from_json(
        r#"{"scenario": {"file": "nowhere.json"}, "mode": "simulate"}"#,
    )
    .unwrap()
    .resolve_scenario()
    .unwrap_err();
    assert!(format!("{missing:#}").contains("nowhere.json"));
}

#[test]
fn eps_sweep_gives_monotone_measured_times() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        &format!(r#"{{"scenario": {{"generator": {UQSC}}}, "mode": "simulate"}}"#),
        dir.path(),
    );
    let grid = SweepGrid {
        eps: Some(vec![0.5, 0.1, 0.01]),
        ..SweepGrid::default()
    };
    let rows = sweep(&c, &grid).unwrap();
    assert_eq!(rows.len(), 3);
    let times: Vec<f64> = rows.iter().map(|r| r.measured_time.unwrap()).collect();
    assert!(times.windows(2).all(|p| p[0] <= p[1]), "{times:?}");
    assert!(rows
        .iter()
        .all(|r| r.violations == 0 && r.bound.unwrap() > r.measured_time.unwrap()));
}

#[test]
fn seed_sweep_keeps_the_certificate_and_varies_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let json = r#"{"scenario": {"generator": {"kind": "sparse_ijc", "n": 3, "gap_growth": 1.5, "tau_d": 0.5, "horizon": 60.0}},
                   "mode": "simulate", "certificate": {"eps": [0.5]}}"#;
    let c = config(json, dir.path());
    let grid = SweepGrid {
        seed: Some(vec![1, 2, 3]),
        ..SweepGrid::default()
    };
    let rows = sweep(&c, &grid).unwrap();
    assert_eq!(
        rows.iter().map(|r| r.seed.unwrap()).collect::<Vec<_>>(),
        vec![1, 2, 3]
    );
    let mut seeded = c.clone();
    let certs: Vec<_> = [1, 2, 3]
        .iter()
        .map(|&s| {
            seeded.seed = Some(s);
            let scenario = seeded.resolve_scenario().unwrap();
            let cert = robcon_cli::pipeline::certificates(&seeded, &scenario).unwrap();
            cert.bidir.unwrap()
        })
        .collect();
    assert!(certs.windows(2).all(|p| p[0] == p[1]));
    assert_ne!(rows[0].measured_time, rows[1].measured_time);
}

#[test]
fn empty_grid_writes_only_the_header() {
    let c = config(
        &format!(r#"{{"scenario": {{"generator": {UQSC}}}, "mode": "simulate"}}"#),
        Path::new("unused"),
    );
    let rows = sweep(&c, &SweepGrid::default()).unwrap();
    let mut out = Vec::new();
    write_sweep_csv(&rows, &mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap().lines().count(), 1);
}

#[test]
fn event_triggered_run_writes_trace_files() {
    let dir = tempfile::tempdir().unwrap();
    let json = r#"{
        "scenario": {"inline": {
            "schema_version": 1,
            "signal": {"n": 2, "tau_d": 1.0, "graphs": [[[1, 2], [2, 1]]], "schedule": [[0.0, 0]], "horizon": 60.0},
            "weights": {"default": {"kind": "constant", "value": 1.0}, "a_low": 1.0, "a_high": 1.0},
            "x0": [1.0, 0.0],
            "horizon": 60.0
        }},
        "mode": "event_triggered",
        "event_triggered": {"amplitude": 0.5, "theta": 0.05, "l0": 1.0}
    }"#;
    let outcome = run(&config(json, dir.path())).unwrap();
    assert_eq!(outcome.report.mode, Mode::EventTriggered);
    assert_eq!(outcome.report.violations, 0, "{:?}", outcome.report.checks);
    let et = outcome.report.event_triggered.as_ref().unwrap();
    assert!(et.tau0 > 0.0 && et.identity_residual <= 1e-8);
    assert!(read(dir.path(), "triggers.csv").starts_with("agent,k,trigger_time,held_value,cause\n"));
    assert!(dir.path().join("deliveries.csv").exists());
}

#[test]
fn binary_exit_status_follows_the_outcome() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        format!(r#"{{"scenario": {{"generator": {UQSC}}}, "mode": "simulate"}}"#),
    )
    .unwrap();
    let bin = env!("CARGO_BIN_EXE_robcon");
    let ok = Command::new(bin)
        .args(["certify", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .args(["--eps", "0.5,0.1"])
        .status()
        .unwrap();
    assert!(ok.success());
    let report: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("out"), "report.json")).unwrap();
    assert_eq!(report["convergence"].as_array().unwrap().len(), 2);

    let conn = Command::new(bin)
        .args(["check-connectivity", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(conn.status.success());
    let text = String::from_utf8(conn.stdout).unwrap();
    assert!(text.contains("\"min_uqsc_window\""));

    std::fs::write(
        &cfg,
        r#"{"scenario": {"generator": {"kind": "example_one"}}, "mode": "simulate"}"#,
    )
    .unwrap();
    let bad = Command::new(bin)
        .args(["run", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8(bad.stderr).unwrap().contains("horizon"));
}
