use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adiabound")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(' ')))
        .unwrap_or_else(|| panic!("no `{key}` in output:\n{text}"))
        .to_string()
}

#[test]
fn bound_for_grover_100() {
    let o = run(&["bound", "--grover-n", "100", "--epsilon", "0.1"]);
    assert_eq!(o.status.code(), Some(0));
    let t: f64 = field(&stdout(&o), "t_f_lower").parse().unwrap();
    assert!((t - 8.9448).abs() < 1e-4, "{t}");
    assert_eq!(field(&stdout(&o), "vacuous"), "false");
}

#[test]
fn bound_is_vacuous_at_full_allowance() {
    let o = run(&["bound", "--grover-n", "4", "--epsilon", "1.0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(field(&stdout(&o), "t_f_lower"), "0");
    assert_eq!(field(&stdout(&o), "vacuous"), "true");

    let j = run(&["bound", "--grover-n", "4", "--epsilon", "1.0", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&j.stdout).unwrap();
    assert_eq!(v["t_f_lower"], 0.0);
    assert_eq!(v["vacuous"], true);
}

#[test]
fn simulate_starts_in_the_ground_state() {
    let o = run(&["simulate", "--grover-n", "4", "--schedule", "linear", "--tf", "50"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,lambda,F,C,int_lambda_dt,norm_dev");
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(first[0], 0.0);
    assert!((first[2] - 1.0).abs() < 1e-12 && (first[3] - 1.0).abs() < 1e-12);
    let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(last[0], 50.0);
    assert!((last[3] - 0.25).abs() < 1e-12);
}

#[test]
fn usage_errors_exit_with_one() {
    for args in [
        &["bound", "--grover-n", "4", "--epsilon", "0.1", "--no-such-flag"][..],
        &["frobnicate"],
        &["bound", "--epsilon", "0.1"],
        &["bound", "--grover-n", "4", "--matrix-pair", "x.json", "--epsilon", "0.1"],
        &["simulate", "--grover-n", "4", "--schedule", "cubic", "--tf", "1"],
        &["bound", "--grover-n", "1", "--epsilon", "0.1"],
        &["bound", "--grover-n", "4", "--epsilon", "1.5"],
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_bracket_is_a_numerical_failure() {
    let o = run(&[
        "min-time", "--grover-n", "64", "--epsilon", "0.01", "--schedule", "power:0.0001", "--t-lo", "0.1", "--t-hi", "0.2",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn min_time_respects_the_bound_and_audits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let tr = dir.path().join("accepted.csv");
    let o = run(&[
        "min-time", "--grover-n", "16", "--schedule", "local-adiabatic", "--epsilon", "0.1", "--json", "--trajectory",
        tr.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let t_f = v["t_f_min"].as_f64().unwrap();
    assert!(t_f >= v["lower_bound"].as_f64().unwrap());
    assert!(1.0 - v["final_fidelity"].as_f64().unwrap() < 0.1);
    assert_eq!(v["verified"], true);

    let a = run(&["audit", "--trajectory", tr.to_str().unwrap(), "--grover-n", "16", "--json"]);
    assert_eq!(a.status.code(), Some(0));
    let audit: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(audit["violated"], false);
    assert!(audit["min_residual"].as_f64().unwrap() >= -1e-7);

    let no_dv = run(&["audit", "--trajectory", tr.to_str().unwrap()]);
    assert_eq!(no_dv.status.code(), Some(1));
}

fn write_matrix_pair(path: &Path) {
    let h0 = serde_json::json!([
        [[1.0, 0.0], [0.3, -0.2], [0.0, 0.0]],
        [[0.3, 0.2], [-0.5, 0.0], [0.1, 0.0]],
        [[0.0, 0.0], [0.1, 0.0], [0.8, 0.0]]
    ]);
    let h1 = serde_json::json!([
        [[0.0, 0.0], [0.0, 0.0], [0.4, 0.1]],
        [[0.0, 0.0], [1.2, 0.0], [0.0, 0.0]],
        [[0.4, -0.1], [0.0, 0.0], [-0.9, 0.0]]
    ]);
    fs::write(path, serde_json::json!({"dim": 3, "h0": h0, "h1": h1}).to_string()).unwrap();
}

#[test]
fn matrix_pair_file_drives_every_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let pair = dir.path().join("pair.json");
    write_matrix_pair(&pair);
    let p = pair.to_str().unwrap();

    let b = run(&["bound", "--matrix-pair", p, "--epsilon", "0.1", "--json"]);
    assert_eq!(b.status.code(), Some(0), "{}", String::from_utf8_lossy(&b.stderr));
    let report: serde_json::Value = serde_json::from_slice(&b.stdout).unwrap();
    assert!(report["delta_v"].as_f64().unwrap() > 0.0);

    let out = dir.path().join("traj.csv");
    let s = run(&["simulate", "--matrix-pair", p, "--schedule", "power:2", "--tf", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(s.status.code(), Some(0));
    assert!(fs::read_to_string(&out).unwrap().starts_with("t,lambda,F,C,int_lambda_dt,norm_dev\n"));

    let a = run(&["audit", "--matrix-pair", p, "--schedule", "tanh:3", "--tf", "2", "--running"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(field(&stdout(&a), "violated"), "false");

    let m = run(&["min-time", "--matrix-pair", p, "--epsilon", "0.2"]);
    assert_eq!(m.status.code(), Some(0), "{}", String::from_utf8_lossy(&m.stderr));

    let la = run(&["min-time", "--matrix-pair", p, "--epsilon", "0.2", "--schedule", "local-adiabatic"]);
    assert_eq!(la.status.code(), Some(1));
}

#[test]
fn tabulated_schedule_file() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("table.csv");
    fs::write(&table, "t,lambda\n0,0\n1,0.2\n3,0.9\n4,1\n").unwrap();
    let spec = format!("tabulated:{}", table.display());
    let o = run(&["simulate", "--grover-n", "8", "--schedule", &spec, "--tf", "8", "--samples", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: Vec<Vec<f64>> =
        stdout(&o).lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3);
    assert!((rows[1][0] - 4.0).abs() < 1e-12 && (rows[1][1] - 0.55).abs() < 1e-12);
}

#[test]
fn sweep_output_is_deterministic_and_sorted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.json");
    let json_out = dir.path().join("summary.json");
    fs::write(
        &cfg,
        serde_json::json!({
            "model": {"grover": {"n": [64, 16, 32]}},
            "schedule": {"kind": "local-adiabatic"},
            "epsilon": [0.2, 0.1],
            "t_lo": 0.1,
            "t_hi": 10.0,
            "workers": 3,
            "json_out": json_out,
        })
        .to_string(),
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    let first = dir.path().join("a.csv");
    let second = dir.path().join("b.csv");
    assert_eq!(run(&["sweep", "--config", c, "--out", first.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(run(&["sweep", "--config", c, "--workers", "1", "--out", second.to_str().unwrap()]).status.code(), Some(0));
    let a = fs::read(&first).unwrap();
    assert_eq!(a, fs::read(&second).unwrap());

    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with(
        "N,epsilon,schedule,t_f_min,lower_bound,slack_ratio,final_fidelity,audit_min_residual,verified,error\n"
    ));
    let keys: Vec<(u64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap())
        })
        .collect();
    assert_eq!(keys, vec![(16, 0.1), (16, 0.2), (32, 0.1), (32, 0.2), (64, 0.1), (64, 0.2)]);
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let slack: f64 = f[5].parse().unwrap();
        assert!(slack >= 1.0 - 1e-6, "{line}");
    }
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(&json_out).unwrap()).unwrap();
    assert!(summary["fits"]["0.1"]["exponent"].is_number());
    assert!(summary["min_time_definition"].as_str().unwrap().contains("first crossing"));
}

#[test]
fn empty_sweep_succeeds_with_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.json");
    fs::write(
        &cfg,
        r#"{"model": {"grover": {"n": []}}, "schedule": {"kind": "linear"}, "epsilon": [0.1], "t_lo": 0.1, "t_hi": 10}"#,
    )
    .unwrap();
    let o = run(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).lines().count() <= 1);
}
