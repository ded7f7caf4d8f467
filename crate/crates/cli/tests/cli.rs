use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fucik-branch"))
        .args(args)
        .arg("--output-dir")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn all_finite(text: &str) -> bool {
    !text.contains("NaN") && !text.contains("inf")
}

#[test]
fn spectrum_matches_squares() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["spectrum", "--grid-n", "199", "--length", "3.14159265", "--count", "5"],
    );
    assert!(out.status.success());
    let csv = read(dir.path(), "spectrum.csv");
    assert!(csv.starts_with("k,lambda_discrete,lambda_continuum\n"));
    for (i, row) in csv_rows(&csv).iter().enumerate() {
        let k = (i + 1) as f64;
        let lam: f64 = row[1].parse().unwrap();
        assert!((lam - k * k).abs() < 1e-3 * k * k, "{lam}");
    }
    assert!(all_finite(&csv));
    let meta: Value = serde_json::from_str(&read(dir.path(), "run_meta.json")).unwrap();
    assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(meta["run"]["grid_n"], 199);
}

#[test]
fn halfeig_without_gamma_is_the_eigenvalue() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), &["halfeig", "--k", "2", "--gamma", "0"])
        .status
        .success());
    let v: Value = serde_json::from_str(&read(dir.path(), "halfeig.json")).unwrap();
    let l1 = v["lambda1"].as_f64().unwrap();
    let l2 = v["lambda2"].as_f64().unwrap();
    let h = std::f64::consts::PI / 200.0;
    let exact = 2.0 / (h * h) * (1.0 - (2.0 * h).cos());
    assert!((l1 - exact).abs() < 1e-8 && (l2 - exact).abs() < 1e-8);
    let v1 = read(dir.path(), "halfeig_v1.csv");
    assert_eq!(csv_rows(&v1).len(), 201);
}

#[test]
fn branch_starts_at_the_split_eigenvalue() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), &["halfeig", "--k", "2", "--gamma", "0.5"])
        .status
        .success());
    let v: Value = serde_json::from_str(&read(dir.path(), "halfeig.json")).unwrap();
    let lambda1 = v["lambda1"].as_f64().unwrap();
    let args = [
        "branch", "--p", "3", "--k", "2", "--which", "1", "--gamma", "0.5", "--steps", "200",
    ];
    assert!(run(dir.path(), &args).status.success());
    let csv = read(dir.path(), "branch_k2_w1.csv");
    assert!(csv.starts_with("s,lambda,alpha,l2,h12,in_cone\n"));
    let rows = csv_rows(&csv);
    let first: f64 = rows[0][1].parse().unwrap();
    assert!((first - lambda1).abs() < 0.05);
    assert!(all_finite(&csv));
    let summary: Value = serde_json::from_str(&read(dir.path(), "branch_summary.json")).unwrap();
    assert!(summary[0]["empirical_rho0"].as_f64().unwrap() > 0.0);
    assert!(summary[0]["termination"]["kind"].is_string());
    assert!(read(dir.path(), "branches.gp").contains("branch_k2_w1.csv"));
}

#[test]
fn identical_flags_give_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "branch", "--p", "3", "--k", "2", "--which", "both", "--gamma", "0.5", "--steps", "40", "--jobs", "2",
    ];
    assert!(run(a.path(), &args).status.success());
    assert!(run(b.path(), &args).status.success());
    for name in ["branch_k2_w1.csv", "branch_k2_w2.csv", "branch_summary.json"] {
        assert_eq!(read(a.path(), name), read(b.path(), name));
    }
}

#[test]
fn transformed_branch_reports_large_norms() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "branch", "--p", "1.5", "--k", "2", "--gamma", "0.5", "--alpha0", "1e-2", "--steps", "20",
    ];
    assert!(run(dir.path(), &args).status.success());
    let rows = csv_rows(&read(dir.path(), "branch_k2_w1.csv"));
    let h12: f64 = rows[0][4].parse().unwrap();
    assert!(h12 > 1e3);
    assert!(read(dir.path(), "branches.gp").contains("back-transformed"));
}

#[test]
fn fucik_and_json_formats() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), &["fucik", "--max-humps", "3", "--samples", "20"])
        .status
        .success());
    let csv = read(dir.path(), "fucik.csv");
    assert!(csv.starts_with("lambda_plus,lambda_minus,n_plus,n_minus\n"));
    assert!(all_finite(&csv));
    assert!(run(dir.path(), &["spectrum", "--count", "3", "--format", "json"])
        .status
        .success());
    let v: Value = serde_json::from_str(&read(dir.path(), "spectrum.json")).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);
}

#[test]
fn verify_reports_constants() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["verify", "--p", "3", "--samples", "10000", "--pairs", "500"],
    );
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&read(dir.path(), "verify.json")).unwrap();
    assert_eq!(v["violations"], 0);
    assert!(v["c1_emp"].as_f64().unwrap() >= 0.5 * (1.0 - 1e-12));
    assert_eq!(v["monotonicity"]["violations"], 0);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["bogus"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["spectrum", "--grid-n", "2"]).status.code(), Some(2));
    assert_eq!(
        run(dir.path(), &["halfeig", "--k", "2", "--gamma", "50"]).status.code(),
        Some(2)
    );
    assert_eq!(run(dir.path(), &["verify", "--p", "1.5"]).status.code(), Some(2));
    let unreachable = [
        "branch",
        "--p",
        "3",
        "--k",
        "2",
        "--gamma",
        "0.5",
        "--corrector-tol",
        "1e-30",
    ];
    let out = run(dir.path(), &unreachable);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seeding"));
}
