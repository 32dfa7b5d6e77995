//! The ten acceptance criteria at their stated tolerances. Each test prints
//! one PASS/FAIL line straight to stdout so it shows even when output is captured.

use std::io::Write;

use serde_json::Value;

use wasep::experiment::{resolve_config, run_check, CheckReport};

/// Fixed before any run.
const SEED: u64 = 20261015;

fn run(name: &str) -> CheckReport {
    let cfg = resolve_config(name, None).unwrap();
    run_check(name, &cfg, SEED).unwrap()
}

fn report(n: usize, name: &str, pass: bool, summary: &str) {
    let line = format!(
        "criterion {n:>2} {name:<18} {}  {summary}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(f).collect()
}

/// Every per-site mean within three standard errors of its target.
fn within_three_se(mean: &[f64], se: &[f64], target: &[f64]) -> bool {
    mean.len() == target.len()
        && mean.iter().zip(se).zip(target).all(|((m, s), t)| (m - t).abs() < 3.0 * s)
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[test]
fn c01_equilibrium() {
    let r = run("equilibrium-check");
    let d = &r.details;
    let mean = floats(&d["mean"]);
    let pass = within_three_se(&mean, &floats(&d["se"]), &vec![0.5; 255]) && d["replicas"] == 64;
    report(1, "equilibrium", pass, &r.summary);
    assert_eq!(pass, r.pass);
    assert!(pass);
}

#[test]
fn c02_reversible() {
    let r = run("reversible-check");
    let d = &r.details;
    // chemical potential interpolating logit(rho_-) and logit(rho_+) linearly in x / N
    let n = 64.0;
    let (a, b) = ((0.2f64 / 0.8).ln(), (0.8f64 / 0.2).ln());
    let marg: Vec<f64> = (0..127)
        .map(|i| {
            let x = i as f64 - (n - 1.0);
            logistic(a * (n - x) / (2.0 * n) + b * (n + x) / (2.0 * n))
        })
        .collect();
    assert!((f(&d["E0"]) - 4f64.ln()).abs() < 1e-12);
    let db = f(&d["detailed_balance_defect"]);
    let pass = within_three_se(&floats(&d["mean"]), &floats(&d["se"]), &marg)
        && db <= 1e-12
        && d["configs"] == 10_000
        && d["replicas"] == 256;
    report(2, "reversible", pass, &r.summary);
    assert_eq!(pass, r.pass);
    assert!(pass);
}

#[test]
fn c03_hydro_limit() {
    let r = run("hydro-limit");
    let rows = r.details["rows"].as_array().unwrap();
    let ns: Vec<u64> = rows.iter().map(|r| r["N"].as_u64().unwrap()).collect();
    let l1: Vec<f64> = rows.iter().map(|r| f(&r["l1"])).collect();
    let pass = ns == [128, 256, 512] && l1.windows(2).all(|w| w[1] < w[0]) && l1[2] < 0.05;
    report(3, "hydro-limit", pass, &r.summary);
    assert_eq!(pass, r.pass);
    assert!(pass);
}

#[test]
fn c04_zero_cost() {
    let r = run("zero-cost");
    let d = &r.details;
    let (c, v) = (f(&d["control"]["value"]), f(&d["variational"]["value"]));
    let pass = c < 1e-6 && v < 1e-6;
    report(4, "zero-cost", pass, &r.summary);
    assert_eq!(pass, r.pass);
    assert!(pass);
}

#[test]
fn c05_cross_formula() {
    let r = run("cross-formula");
    let rows = r.details["rows"].as_array().unwrap();
    let pass = rows.len() == 5
        && rows.iter().all(|row| {
            let (c, e, v) = (f(&row["control"]), f(&row["explicit"]), f(&row["variational"]));
            (c - e).abs() / c.max(1.0) < 1e-3 && v <= c && (c - v) / c <= 0.05
        });
    report(5, "cross-formula", pass, &r.summary);
    assert_eq!(pass, r.pass);
    assert!(pass);
}

#[test]
fn c06_hminus1() {
    let r = run("hminus1");
    let d = &r.details;
    let rel = (f(&d["gradient"]) - f(&d["oracle"])).abs() / f(&d["oracle"]);
    let pass = f(&d["constant"]).abs() < 1e-10 && rel < 1e-4;
    report(6, "hminus1", pass, &r.summary);
    assert_eq!(pass, r.pass);
    assert!(pass);
}

#[test]
fn c07_entropy() {
    let r = run("entropy");
    let d = &r.details;
    let target = f(&d["target"]["value"]);
    let rows = d["rows"].as_array().unwrap();
    let gap = |r: &Value| (f(&r["estimate"]) - target).abs();
    let shrinking = rows.windows(2).all(|w| {
        let slack = 2.0 * (f(&w[0]["se"]).powi(2) + f(&w[1]["se"]).powi(2)).sqrt();
        gap(&w[1]) <= gap(&w[0]) + slack
    });
    let last = rows.last().unwrap();
    let pass = last["N"] == 256 && gap(last) / target < 0.10 && shrinking;
    report(7, "entropy", pass, &r.summary);
    assert_eq!(pass, r.pass);
    assert!(pass);
}

#[test]
fn c08_resolvent() {
    let r = run("resolvent");
    let d = &r.details;
    // refit every slope here from the stored errors
    let x: Vec<f64> = floats(&d["h"]).iter().map(|h| h.ln()).collect();
    let slope = |e: &[f64]| {
        let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
        let k = x.len() as f64;
        let (mx, my) = (x.iter().sum::<f64>() / k, y.iter().sum::<f64>() / k);
        let num: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        num / x.iter().map(|a| (a - mx).powi(2)).sum::<f64>()
    };
    let errs = d["errors"].as_array().unwrap();
    let min_slope = errs.iter().map(|e| slope(&floats(e))).fold(f64::INFINITY, f64::min);
    let pass = errs.len() == 20 && f(&d["row_sum_deviation"]) < 1e-8 && min_slope >= 1.8;
    report(8, "resolvent", pass, &r.summary);
    assert_eq!(pass, r.pass);
    assert!(pass);
}

#[test]
fn c09_energy() {
    let r = run("energy");
    let d = &r.details;
    let rows = d["rows"].as_array().unwrap();
    let within = rows.iter().all(|row| {
        let (q, v) = (f(&row["energy"]), f(&row["variational"]));
        v <= q * (1.0 + 1e-10) && (q - v) / q <= 0.02
    });
    let pass = rows.len() == 5 && within && f(&d["convexity_worst_gap"]) <= 1e-8 && d["pairs"] == 100;
    report(9, "energy", pass, &r.summary);
    assert_eq!(pass, r.pass);
    assert!(pass);
}

#[test]
fn c10_density() {
    let r = run("density");
    let rep = &r.details["report"];
    let target = f(&rep["target"]);
    let fin = rep["rows"]
        .as_array()
        .unwrap()
        .iter()
        .min_by(|a, b| f(&a["epsilon"]).total_cmp(&f(&b["epsilon"])))
        .unwrap();
    let pass = (f(&fin["rate"]) - target).abs() / target < 0.02 && f(&fin["l1_distance"]) < 1e-2;
    report(10, "density", pass, &r.summary);
    assert_eq!(pass, r.pass);
    assert!(pass);
}
