use std::path::Path;
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;
use vsmtune_cli::{NetworkFile, Scenario};
use vsmtune_core::{objective_value, DVector, ObjectiveConfig};

fn vsmtune(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vsmtune"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let header = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn out_arg(dir: &TempDir) -> String {
    dir.path().to_str().unwrap().to_string()
}

#[test]
fn network_file_roundtrip() {
    let file = NetworkFile::bundled().unwrap();
    let again = NetworkFile::parse(&file.to_json()).unwrap();
    assert_eq!(again.spec, file.spec);
    assert_eq!(again.defaults, file.defaults);
}

#[test]
fn reduce_prints_laplacian() {
    let dir = TempDir::new().unwrap();
    let out = vsmtune(&["reduce", "--out", &out_arg(&dir)]);
    assert!(out.status.success());
    let (header, rows) = read_csv(&dir.path().join("reduced_laplacian.csv"));
    assert_eq!(header.len(), 10);
    assert_eq!(rows.len(), 9);
    for row in &rows {
        let sum: f64 = row[1..].iter().map(|v| v.parse::<f64>().unwrap()).sum();
        assert!(sum.abs() < 1e-10);
    }
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 10);
}

#[test]
fn optimize_writes_consistent_outputs() {
    let dir = TempDir::new().unwrap();
    let out = vsmtune(&["optimize", "--beta", "0.1", "--out", &out_arg(&dir)]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (header, rows) = read_csv(&dir.path().join("coefficients.csv"));
    assert_eq!(
        header,
        ["bus", "m_hat", "d_hat", "m", "d", "m_total", "d_total"]
    );
    assert_eq!(rows.len(), 9);
    let (_, conv) = read_csv(&dir.path().join("convergence.csv"));
    let j: Vec<f64> = conv.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(j.windows(2).all(|w| w[1] <= w[0]));

    // The final objective matches an independent evaluation of the written design.
    let s = Scenario::bundled().unwrap();
    let col =
        |k: usize| DVector::from_iterator(9, rows.iter().map(|r| r[k].parse::<f64>().unwrap()));
    let design = s.design(col(3), col(4)).unwrap();
    let cfg = ObjectiveConfig {
        beta: 0.1,
        eta: None,
    };
    let j_eval = objective_value(&design, &cfg, &s.net, s.ref_index).unwrap();
    assert!((j_eval - j.last().unwrap()).abs() <= 1e-12 * j_eval);

    let (_, summary) = read_csv(&dir.path().join("optimize_summary.csv"));
    let get = |k: &str| summary.iter().find(|r| r[0] == k).unwrap()[1].clone();
    assert_eq!(get("formulation"), "unknown_location");
    assert_eq!(get("converged"), "true");
}

#[test]
fn simulate_from_coefficients_file() {
    let dir = TempDir::new().unwrap();
    let out_dir = out_arg(&dir);
    assert!(
        vsmtune(&["optimize", "--disturb-node", "6", "--out", &out_dir])
            .status
            .success()
    );
    let coeffs = dir.path().join("coefficients.csv");
    let out = vsmtune(&[
        "simulate",
        "--coeffs",
        coeffs.to_str().unwrap(),
        "--horizon",
        "5",
        "--dt",
        "0.01",
        "--disturb-node",
        "6",
        "--out",
        &out_dir,
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (header, rows) = read_csv(&dir.path().join("trajectory.csv"));
    assert_eq!(header[0], "t");
    assert_eq!(header[5], "omega_6");
    assert_eq!(rows.len(), 501);
    let (_, metrics) = read_csv(&dir.path().join("metrics.csv"));
    assert_eq!(metrics.len(), 9);
    assert!(metrics.iter().all(|r| r[0] == "dopt_mopt"));
}

#[test]
fn compare_writes_three_variants() {
    let dir = TempDir::new().unwrap();
    let out = vsmtune(&["compare", "--horizon", "10", "--out", &out_arg(&dir)]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for label in ["dmax_mmin", "dopt_mopt", "dmax_mmax"] {
        assert!(dir.path().join(format!("trajectory_{label}.csv")).exists());
    }
    let (_, metrics) = read_csv(&dir.path().join("metrics.csv"));
    assert_eq!(metrics.len(), 27);
}

#[test]
fn sweep_writes_one_row_per_beta() {
    let dir = TempDir::new().unwrap();
    let out = vsmtune(&[
        "sweep-beta",
        "--betas",
        "-0.1,0.1",
        "--horizon",
        "5",
        "--out",
        &out_arg(&dir),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (_, rows) = read_csv(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[8] == "ok"));
    assert!(dir.path().join("coefficients_beta_1.csv").exists());
    let (header, _) = read_csv(&dir.path().join("sweep_trajectories.csv"));
    assert_eq!(header, ["t", "beta_-0.1", "beta_0.1"]);
}

#[test]
fn zero_disturbance_gives_flat_trajectory() {
    let dir = TempDir::new().unwrap();
    let out = vsmtune(&[
        "simulate",
        "--variant",
        "midpoint",
        "--disturb-node",
        "6",
        "--magnitude",
        "0",
        "--horizon",
        "2",
        "--dt",
        "0.01",
        "--out",
        &out_arg(&dir),
    ]);
    assert!(out.status.success());
    let (_, rows) = read_csv(&dir.path().join("trajectory.csv"));
    assert!(rows
        .iter()
        .all(|r| r[1..].iter().all(|v| v.parse::<f64>().unwrap() == 0.0)));
}

#[test]
fn input_errors_exit_with_code_two() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"buses":[{"id":1,"kind":"generator","m_hat":1,"d_hat":1}],"lines":[{"from":1,"to":7,"b":1}]}"#,
    )
    .unwrap();
    let out = vsmtune(&["reduce", "--network", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown bus 7"));

    let out_dir = out_arg(&dir);
    for args in [
        vec!["optimize", "--ref-bus", "3", "--out", &out_dir],
        vec!["optimize", "--bounds", "1,0,0,1", "--out", &out_dir],
        vec!["simulate", "--disturb-node", "99", "--out", &out_dir],
        vec!["optimize", "--seed-point", "2", "--out", &out_dir],
    ] {
        assert_eq!(vsmtune(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn damping_lowers_the_norm_on_bundled_case() {
    let s = Scenario::bundled().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = ObjectiveConfig::default();
    for _ in 0..5 {
        let m = DVector::from_fn(s.n(), |_, _| rng.gen_range(0.0..4.0));
        let d = DVector::from_fn(s.n(), |_, _| rng.gen_range(0.0..1.5));
        let p = s.design(m.clone(), d.clone()).unwrap();
        let j = objective_value(&p, &cfg, &s.net, s.ref_index).unwrap();
        for i in 0..s.n() {
            let mut d2 = d.clone();
            d2[i] += 0.3;
            let q = s.design(m.clone(), d2).unwrap();
            assert!(objective_value(&q, &cfg, &s.net, s.ref_index).unwrap() < j);
        }
    }
}
