use std::process::{Command, Output};
use std::time::Instant;

fn fockbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fockbench"))
        .args(args)
        .env_remove("FOCKBENCH_DIM")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect()
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

#[test]
fn even_cat_statistics() {
    let beta: f64 = 2.0;
    let out = stdout(&fockbench(&["pnd", "--state", "cat", "--beta", "2", "--phi", "0"]));
    let r = rows(&out);
    assert!(!r.is_empty());
    let norm = 1.0 + (-2.0 * beta * beta).exp();
    for row in &r {
        let n = row[0] as u32;
        assert_eq!(n % 2, 0, "odd row {n} present");
        let want = 2.0 * (-beta * beta).exp() * beta.powi(2 * n as i32) / factorial(n) / norm;
        assert!((row[1] - want).abs() <= 1e-10, "n={n}: {} vs {want}", row[1]);
    }
}

#[test]
fn vacuum_plus_one_photon() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("added.json");
    let p = path.to_str().unwrap();
    stdout(&fockbench(&["apply", "--state", "vacuum", "--chain", "add_ideal", "--out", p]));
    let out = stdout(&fockbench(&["pnd", "--input", p]));
    let data: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(data.len(), 1);
    let r = rows(&out);
    assert_eq!(r[0][0], 1.0);
    assert_eq!(r[0][1], 1.0);
}

#[test]
fn headline_numbers() {
    let out = stdout(&fockbench(&["reproduce", "table-numbers"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let s0 = v["tmsv_zeta_1"]["von_neumann"].as_f64().unwrap();
    let s1 = v["both_modes_subtracted_zeta_1"]["von_neumann"].as_f64().unwrap();
    assert!((s0 - 2.34).abs() <= 0.01, "{s0}");
    assert!((s1 - 3.53).abs() <= 0.02, "{s1}");
    assert_eq!(v["both_modes_subtracted_zeta_1"]["marginal_peak_n"], 3);
    assert!(v["kitten"]["fidelity"].as_f64().unwrap() >= 0.99);
}

#[test]
fn every_reproduction_runs_quickly() {
    let t = Instant::now();
    for target in ["fig3", "fig4", "fig8", "fig9", "table-numbers"] {
        let out = stdout(&fockbench(&["reproduce", target]));
        assert!(out.lines().count() > 1, "{target}");
    }
    assert!(t.elapsed().as_secs_f64() < 60.0);
}

#[test]
fn figure_nine_p_functions_change_sign() {
    let out = stdout(&fockbench(&["reproduce", "fig9", "--window", "1,41"]));
    let r = rows(&out);
    assert_eq!(r.len(), 41 * 41);
    assert!(r.iter().any(|row| row[3] < 0.0));
    assert!(r.iter().any(|row| row[2] < 0.0));
}

#[test]
fn outputs_are_deterministic() {
    for args in [
        &["wigner", "--state", "cat", "--beta", "1.5", "--window", "3,41"][..],
        &["qfunc", "--state", "squeezed", "--zeta", "0.4", "--window", "3,31"][..],
        &["pfunc", "--state", "thermal", "--nbar", "0.7", "--s", "0.5", "--window", "3,21"][..],
        &["apply", "--state", "coherent", "--beta", "1+0.5i", "--chain", "subtract_bs:theta=0.1:detector=on-off,displace:re=1"][..],
        &["kitten-scan", "--zetas", "0.3:0.5:0.1", "--betas", "1:1.2:0.1"][..],
    ] {
        let a = stdout(&fockbench(args));
        let b = stdout(&fockbench(args));
        assert_eq!(a, b, "{args:?}");
    }
}

#[test]
fn dimension_flag_and_environment() {
    let out = stdout(&fockbench(&["pnd", "--state", "vacuum", "--all", "--dim", "7"]));
    assert_eq!(out.lines().count(), 8);
    let o = Command::new(env!("CARGO_BIN_EXE_fockbench"))
        .args(["pnd", "--state", "vacuum", "--all"])
        .env("FOCKBENCH_DIM", "5")
        .output()
        .unwrap();
    assert_eq!(stdout(&o).lines().count(), 6);
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| fockbench(args).status.code().unwrap();
    // validation failures
    assert_eq!(code(&["pnd", "--state", "vacuum", "--dim", "1"]), 1);
    assert_eq!(code(&["pnd", "--state", "vacuum", "--dim", "513"]), 1);
    assert_eq!(code(&["pnd", "--state", "vacuum", "--bogus", "1"]), 1);
    assert_eq!(code(&["apply", "--state", "vacuum", "--chain", "add_ideal:theta=1"]), 1);
    assert_eq!(code(&["apply", "--state", "vacuum", "--chain", "teleport"]), 1);
    assert_eq!(code(&["pfunc", "--state", "coherent"]), 1);
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["dakna", "--coeffs", "1,0"]), 1);
    // numerical failures
    assert_eq!(code(&["pnd", "--state", "vacuum", "--chain", "subtract_ideal"]), 2);
    assert_eq!(code(&["wigner", "--state", "coherent", "--beta", "3", "--window", "1,21"]), 0);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn two_mode_pipeline() {
    let out = stdout(&fockbench(&[
        "pnd", "--state", "tmsv", "--zeta", "0.3", "--dim", "20", "--chain", "beamsplit:theta=1.5707963267948966", "--mode", "a",
    ]));
    let total: f64 = rows(&out).iter().map(|r| r[1]).sum();
    assert!((total - 1.0).abs() < 1e-12);
    let rep = stdout(&fockbench(&["entangle", "--state", "tmsv", "--zeta", "1"]));
    let v: serde_json::Value = serde_json::from_str(&rep).unwrap();
    assert!((v["von_neumann"].as_f64().unwrap() - 2.3369).abs() < 1e-3);
}

#[test]
fn dakna_round_trip() {
    let out = stdout(&fockbench(&["dakna", "--coeffs", "0.5,0,0,0.5-0.2i", "--dim", "30"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["fidelity"].as_f64().unwrap() >= 1.0 - 1e-8);
    assert_eq!(v["plan"]["alphas"].as_array().unwrap().len(), 3);
}
