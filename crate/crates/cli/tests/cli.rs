use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn umbilic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_umbilic")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json_file(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

/// `defect_max=<x>` from the one-line gen summary.
fn summary_defect(line: &str) -> f64 {
    line.split_whitespace().find_map(|w| w.strip_prefix("defect_max=")).unwrap().parse().unwrap()
}

#[test]
fn gen_obj_on_a_128_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.obj");
    let o = umbilic(&["gen", "--space", "s2xr", "--family", "a-lt-1", "--param", "0.5", "--grid", "128x128", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o);
    assert_eq!(line.lines().count(), 1);
    assert!(summary_defect(&line) < 1e-6, "{line}");
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 128 * 128);
    assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), 127 * 127);
    // every vertex sits on the unit-sphere side of the chart: finite coordinates
    assert!(text.lines().filter(|l| l.starts_with("v ")).all(|l| l.split_whitespace().skip(1).all(|c| c.parse::<f64>().unwrap().is_finite())));
}

#[test]
fn gen_parabolic_csv_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sp.csv");
    let o = umbilic(&["gen", "--space", "h2xr", "--family", "parabolic", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("s,rho,t,theta"));
    let mut rows = 0;
    for l in lines {
        let v: Vec<f64> = l.split(',').map(|c| c.parse().unwrap()).collect();
        let s = v[0];
        // ρ = −log cosh s, t = 2 arctan eˢ − π/2
        let rho = -(s.abs() + (-2.0 * s.abs()).exp().ln_1p() - std::f64::consts::LN_2);
        let t = 2.0 * s.exp().atan() - std::f64::consts::FRAC_PI_2;
        assert!((v[1] - rho).abs() < 1e-12 && (v[2] - t).abs() < 1e-12, "s = {s}");
        rows += 1;
    }
    assert_eq!(rows, 401);
}

#[test]
fn gen_ply_carries_defect_quality() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e.ply");
    let o = umbilic(&["gen", "--space", "h2xr", "--family", "elliptic", "--param", "1", "--grid", "20x30", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let bytes = std::fs::read(&out).unwrap();
    let end = b"end_header\n";
    let h = bytes.windows(end.len()).position(|w| w == end).unwrap() + end.len();
    let header = std::str::from_utf8(&bytes[..h]).unwrap();
    assert!(header.contains("element vertex 600") && header.contains("property double quality") && header.contains("element face 551"));
    assert_eq!(bytes.len() - h, 600 * 32 + 551 * (1 + 16));
    let q: Vec<f64> = (0..600).map(|k| f64::from_le_bytes(bytes[h + 32 * k + 24..h + 32 * k + 32].try_into().unwrap())).collect();
    assert!(q.iter().all(|d| *d < 1e-6), "{:?}", q.iter().copied().fold(0.0, f64::max));
}

#[test]
fn gen_json_summary() {
    let o = umbilic(&["gen", "--space", "sol", "--family", "fa", "--param", "1", "--grid", "16x16"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["resolved_config"]["param"], 1.0);
    assert_eq!(v["resolved_config"]["grid"], serde_json::json!([16, 16]));
    assert!(v["defect"]["max"].as_f64().unwrap() < 1e-6);
}

#[test]
fn invalid_parameters_exit_2_with_one_line() {
    let cases: [(&[&str], &str); 6] = [
        (&["gen", "--space", "s2xr", "--family", "a-lt-1", "--param", "1.5"], "a must lie in (0,1)"),
        (&["gen", "--space", "s2xr", "--family", "a-gt-1", "--param", "0.5"], "a must lie in (1,inf)"),
        (&["gen", "--space", "h2xr", "--family", "hyperbolic"], "c is required and must lie in (0,1)"),
        (&["gen", "--space", "h2xr", "--family", "nope"], "unknown family"),
        (&["gen", "--space", "s2xr", "--family", "slice", "--out", "x.obj", "--grid", "1x5"], "grid sizes"),
        (&["falsify", "--kappa", "0"], "--tau"),
    ];
    for (args, msg) in cases {
        let o = umbilic(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let e = stderr(&o);
        assert_eq!(e.trim_end().lines().count(), 1, "{e}");
        assert!(e.contains(msg), "{args:?}: {e}");
    }
}

#[test]
fn csv_needs_a_profile() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.csv");
    let o = umbilic(&["gen", "--space", "s2xr", "--family", "cylinder", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_product_identities() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.json");
    let o = umbilic(&["verify", "--suite", "product-identities", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json_file(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["resolved_config"]["suite"], "product-identities");
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 6 * 5);
    for c in checks {
        assert!(c["max_residual"].as_f64().unwrap() < 1e-5, "{c}");
    }
    for name in ["daniel_formula", "gradient_product", "bracket_TJT", "jt_nu"] {
        assert!(checks.iter().any(|c| c["identity"] == name), "{name}");
    }
}

#[test]
fn verify_sol_and_killing_suites() {
    for suite in ["sol-identities", "killing"] {
        let o = umbilic(&["verify", "--suite", suite]);
        assert!(o.status.success(), "{suite}: {}", stderr(&o));
        let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(v["pass"], true);
    }
}

#[test]
fn falsify_is_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["falsify", "--kappa", "0", "--tau", "0.5", "--starts", "6", "--seed", "3"];
    let a = umbilic(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_umbilic")).args(args).env("UMBILIC_THREADS", "1").output().unwrap();
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    let out = dir.path().join("f.json");
    let c = umbilic(&[&args[..], &["--out", out.to_str().unwrap()]].concat());
    assert!(c.status.success());
    assert_eq!(std::fs::read(&out).unwrap(), a.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["resolved_config"]["seed"], 3);
    assert_eq!(v["regime"], "nonexistence");
}

#[test]
fn falsify_heisenberg_floor_with_50_starts() {
    let o = umbilic(&["falsify", "--kappa", "0", "--tau", "0.5", "--starts", "50", "--seed", "7"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["min_defect_found"].as_f64().unwrap() > 1e-2);
}

#[test]
fn bad_thread_count_is_rejected() {
    let o = Command::new(env!("CARGO_BIN_EXE_umbilic")).args(["catalog"]).env("UMBILIC_THREADS", "zero").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("UMBILIC_THREADS"));
}

#[test]
fn conformal_reports() {
    for map in ["s2xr", "h2xi"] {
        let o = umbilic(&["conformal", "--map", map]);
        assert!(o.status.success(), "{map}: {}", stderr(&o));
        let v: Value = serde_json::from_slice(&o.stdout).unwrap();
        assert!(v["max_off_proportionality"].as_f64().unwrap() < 1e-8);
    }
    let o = umbilic(&["conformal", "--map", "sol", "--a", "1", "--grid", "21"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["exponent_discrepancy"], true);
    assert!(v["max_metric_residual"].as_f64().unwrap() < 1e-8);
    assert_eq!(umbilic(&["conformal", "--map", "sol", "--a", "-1"]).status.code(), Some(2));
}

#[test]
fn catalog_has_twelve_rows() {
    let o = umbilic(&["catalog"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 1 + 12);
    let v: Value = serde_json::from_slice(&umbilic(&["catalog", "--json"]).stdout).unwrap();
    let rows = v["families"].as_array().unwrap();
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| !r["description"].as_str().unwrap().is_empty()));
}
