use std::fs;
use std::path::Path;
use std::process::Command;

use wasep::experiment::*;
use wasep::field::uniform_times;
use wasep::hydro::solve_hydro;
use wasep::io::{read_path_csv, write_path_csv, Config};
use wasep::{DensityField, Error, ModelParams, SpaceGrid, SpaceTimePath, TransportCoeffs};

const SMALL: &str = "N = 16\nE = 1\nrho_minus = 0.2\nrho_plus = 0.8\nT = 0.5\nM = 32\nsteps = 50\n";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wasep"))
}

fn spec(name: &str, config: Option<&Path>, seed: u64, out: &Path) -> ExperimentSpec {
    ExperimentSpec {
        name: name.into(),
        config: config.map(Path::to_path_buf),
        seed,
        replicas: None,
        out: out.to_path_buf(),
    }
}

#[test]
fn empty_path_round_trip() {
    let mut buf = vec![];
    write_path_csv(&SpaceTimePath::empty(), &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf.clone()).unwrap(), "t,u,value\n");
    assert!(read_path_csv(&buf[..]).unwrap().is_empty());
}

#[test]
fn hydro_path_round_trip_is_exact() {
    let p = ModelParams::new(32, 1.0, 0.2, 0.8, 0.3).unwrap();
    let g = DensityField::from_fn(SpaceGrid::new(48), |u| p.linear_profile(u) + 0.1 * (1.0 - u * u));
    let path = solve_hydro(&g, &p, &TransportCoeffs::wasep(), 0.01).unwrap();
    let mut buf = vec![];
    write_path_csv(&path, &mut buf).unwrap();
    let back = read_path_csv(&buf[..]).unwrap();
    assert_eq!(back.max_abs_diff(&path).unwrap(), 0.0);
    assert_eq!(back.times(), path.times());
}

#[test]
fn non_uniform_times_name_the_row() {
    // three nodes per slice; the third slice starts on file row 8
    let text = "t,u,value\n0,-1,0.2\n0,0,0.5\n0,1,0.8\n0.1,-1,0.2\n0.1,0,0.5\n0.1,1,0.8\n\
                0.25,-1,0.2\n0.25,0,0.5\n0.25,1,0.8\n";
    match read_path_csv(text.as_bytes()) {
        Err(Error::Parse { row, .. }) => assert_eq!(row, 8),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn malformed_rows_are_rejected() {
    let bad = "t,u,value\n0,-1,0.2\n0,0,x\n0,1,0.8\n";
    assert!(matches!(read_path_csv(bad.as_bytes()), Err(Error::Parse { row: 3, .. })));
    let off_grid = "t,u,value\n0,-1,0.2\n0,0.1,0.5\n0,1,0.8\n";
    assert!(matches!(read_path_csv(off_grid.as_bytes()), Err(Error::Parse { .. })));
}

#[test]
fn config_layers_overrides() {
    let c = resolve_config("zero-cost", Some("M = 64\nK = 8")).unwrap();
    assert_eq!(c.m, 64);
    assert_eq!(c.extra["K"], "8");
    assert_eq!(c.params.n, 100);
    assert!(resolve_config("no-such-thing", None).is_err());
    assert!(Config::parse("N = 4\nE = 0\nrho_minus = 0.7\nrho_plus = 0.2\nT = 1\nM = 8").is_err());
    for name in EXPERIMENTS {
        assert!(resolve_config(name, None).is_ok(), "{name}");
    }
}

#[test]
fn missing_config_is_an_input_error_with_no_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run_experiment(&spec("hminus1", Some(&dir.path().join("nope.cfg")), 1, &out));
    assert_eq!(o.code, EXIT_INPUT);
    assert!(o.report.is_none() && o.artifacts.is_empty());
    assert!(is_empty_dir(&out));
}

#[test]
fn invalid_override_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "rho_plus = 1.5\n").unwrap();
    let out = dir.path().join("out");
    let o = run_experiment(&spec("hminus1", Some(&cfg), 1, &out));
    assert_eq!(o.code, EXIT_INPUT);
    assert!(is_empty_dir(&out));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    fs::write(&cfg, "N = 12\nT = 0.5\nreplicas = 16\nconfigs = 200\n").unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let oa = run_experiment(&spec("reversible-check", Some(&cfg), 7, &a));
    let ob = run_experiment(&spec("reversible-check", Some(&cfg), 7, &b));
    assert!(oa.error.is_none() && ob.error.is_none());
    let ja = fs::read(a.join("reversible-check.json")).unwrap();
    let jb = fs::read(b.join("reversible-check.json")).unwrap();
    assert_eq!(ja, jb);
    let c = dir.path().join("c");
    run_experiment(&spec("reversible-check", Some(&cfg), 8, &c));
    assert_ne!(fs::read(c.join("reversible-check.json")).unwrap(), ja);
}

#[test]
fn small_reversible_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    fs::write(&cfg, "N = 16\nT = 1\nreplicas = 64\nconfigs = 1000\n").unwrap();
    let o = run_experiment(&spec("reversible-check", Some(&cfg), 3, dir.path()));
    assert_eq!(o.code, EXIT_OK, "{:?}", o.report.map(|r| r.summary));
    let doc: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("reversible-check.json")).unwrap()).unwrap();
    assert_eq!(doc["pass"], true);
    assert!(doc["details"]["detailed_balance_defect"].as_f64().unwrap() <= 1e-12);
    // re-derive the per-site comparison from the stored numbers
    let mean = doc["details"]["mean"].as_array().unwrap();
    let se = doc["details"]["se"].as_array().unwrap();
    let marg = doc["details"]["marginals"].as_array().unwrap();
    assert_eq!(mean.len(), 31);
    for i in 0..mean.len() {
        let (m, s, q) = (mean[i].as_f64().unwrap(), se[i].as_f64().unwrap(), marg[i].as_f64().unwrap());
        assert!((m - q).abs() < 3.0 * s, "site {i}");
    }
}

#[test]
fn binary_runs_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    fs::write(&cfg, SMALL).unwrap();
    let out = dir.path().join("out");
    let run = |args: &[&str]| {
        bin().args(args).arg("--config").arg(&cfg).arg("--out").arg(&out).output().unwrap()
    };

    let o = run(&["stationary"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("stationary.csv").exists());

    let o = run(&["hydro"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let hydro = out.join("hydro.csv");
    let path = read_path_csv(fs::File::open(&hydro).unwrap()).unwrap();
    assert_eq!(path.n_times(), 51);

    let o = run(&["rate", "--path", hydro.to_str().unwrap(), "--method", "control"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&fs::read(out.join("rate.json")).unwrap()).unwrap();
    assert!(doc["value"].as_f64().unwrap() < 1e-6);
    assert!(doc["residuals"].is_object() && doc["flags"].is_object());

    let o = run(&["rate", "--path", hydro.to_str().unwrap(), "--method", "bogus"]);
    assert_eq!(o.status.code(), Some(EXIT_INPUT));

    let o = run(&["smooth", "--path", hydro.to_str().unwrap(), "--op", "blend", "--eps", "0.25"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("smooth.csv").exists());

    let o = run(&["simulate", "--replicas", "2", "--seed", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let snaps = fs::read_to_string(out.join("snapshots.csv")).unwrap();
    assert_eq!(snaps.lines().count(), 52);
}

#[test]
fn binary_experiment_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = bin()
        .args(["experiment", "hminus1", "--config"])
        .arg(dir.path().join("missing.cfg"))
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(EXIT_INPUT));
    assert!(is_empty_dir(&out));

    let cfg = dir.path().join("fast.cfg");
    fs::write(&cfg, "M = 64\nsteps = 40\n").unwrap();
    let o = bin()
        .args(["experiment", "hminus1", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("hminus1: PASS"));

    // a tolerance the small grid cannot meet gives the tolerance exit code
    fs::write(&cfg, "M = 16\nsteps = 10\nK = 2\nL = 1\n").unwrap();
    let o = bin()
        .args(["experiment", "cross-formula", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(EXIT_TOLERANCE));
    assert!(out.join("cross-formula.json").exists());
}

#[test]
fn uniform_times_end_exactly() {
    let t = uniform_times(0.3, 7);
    assert_eq!(t.len(), 8);
    assert_eq!(t[0], 0.0);
    assert_eq!(*t.last().unwrap(), 0.3);
}
