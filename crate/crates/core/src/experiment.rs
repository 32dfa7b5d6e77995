//! Named, seeded experiments with JSON reports and distinct exit codes.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::field::{uniform_times, DensityField, SpaceTimePath};
use crate::grid::{gradient, SpaceGrid};
use crate::hydro::solve_hydro;
use crate::io::{write_json, Config};
use crate::micro::{
    empirical_density, estimate_entropy_with_density, event_rates, replica_rng, run_replicas,
    simulate_with, Event, LatticeConfig, OccupationAverager, Side, TiltSpec,
};
use crate::model::{reversible_field, reversible_marginals, ModelParams, TransportCoeffs};
use crate::rate::{
    energy_q, energy_q_variational, hminus1_norm, rate_i_explicit, rate_i_control, rate_i_variational,
    solve_control_h, MomentumField, TestBasis,
};
use crate::smoothing::{density_check, resolvent_kernel, KernelKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_TOLERANCE: i32 = 4;

pub const EXPERIMENTS: [&str; 10] = [
    "equilibrium-check",
    "reversible-check",
    "hydro-limit",
    "zero-cost",
    "cross-formula",
    "hminus1",
    "entropy",
    "resolvent",
    "energy",
    "density",
];

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub name: String,
    /// Overrides for the experiment's built-in config.
    pub config: Option<PathBuf>,
    pub seed: u64,
    pub replicas: Option<usize>,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub pass: bool,
    pub summary: String,
    pub details: Value,
}

#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub report: Option<CheckReport>,
    pub artifacts: Vec<PathBuf>,
    pub error: Option<String>,
}

/// Built-in config of each experiment; user files are layered on top.
pub fn default_config(name: &str) -> Option<&'static str> {
    Some(match name {
        "equilibrium-check" => "N = 128\nE = 0\nrho_minus = 0.5\nrho_plus = 0.5\nT = 5\nM = 128\nreplicas = 64\n",
        "reversible-check" => "N = 64\nE = 1.3862943611198906\nrho_minus = 0.2\nrho_plus = 0.8\nT = 5\nM = 128\nreplicas = 256\nconfigs = 10000\n",
        "hydro-limit" => "N = 512\nE = 1\nrho_minus = 0.2\nrho_plus = 0.8\nT = 0.1\nM = 256\nsteps = 200\nsizes = 128, 256, 512\ngamma = 0.5\nreplicas = 64\n",
        "zero-cost" => "N = 100\nE = 1\nrho_minus = 0.2\nrho_plus = 0.8\nT = 1\nM = 256\nsteps = 200\nK = 32\nL = 8\n",
        "cross-formula" => "N = 100\nE = 1\nrho_minus = 0.2\nrho_plus = 0.8\nT = 1\nM = 256\nsteps = 200\nK = 32\nL = 8\n",
        "hminus1" => "N = 100\nE = 1\nrho_minus = 0.2\nrho_plus = 0.8\nT = 1\nM = 256\nsteps = 200\n",
        "entropy" => "N = 256\nE = 1\nrho_minus = 0.2\nrho_plus = 0.8\nT = 0.2\nM = 256\nsteps = 400\nsizes = 64, 128, 256\nreplicas = 512\n",
        "resolvent" => "N = 100\nE = 0\nrho_minus = 0.5\nrho_plus = 0.5\nT = 1\nM = 256\nepsilon = 0.05\ngrids = 32, 64, 128, 256, 512\nfields = 20\n",
        "energy" => "N = 100\nE = 1\nrho_minus = 0.2\nrho_plus = 0.8\nT = 1\nM = 256\nsteps = 200\nK = 32\nL = 8\npairs = 100\n",
        "density" => "N = 100\nE = 1\nrho_minus = 0.2\nrho_plus = 0.8\nT = 1\nM = 128\nsteps = 8192\nepsilons = 0.015625, 0.0078125, 0.00390625, 0.001953125, 0.0009765625\n",
        _ => return None,
    })
}

/// Built-in config of `name` with the text of `overrides` layered on top.
pub fn resolve_config(name: &str, overrides: Option<&str>) -> Result<Config> {
    let base = default_config(name)
        .ok_or_else(|| Error::Config(format!("unknown experiment '{name}'")))?;
    let mut text = base.to_string();
    if let Some(o) = overrides {
        text.push('\n');
        text.push_str(o);
    }
    Config::parse(&text)
}

/// Dispatches to the named check.
pub fn run_check(name: &str, cfg: &Config, seed: u64) -> Result<CheckReport> {
    match name {
        "equilibrium-check" => equilibrium_check(cfg, seed),
        "reversible-check" => reversible_check(cfg, seed),
        "hydro-limit" => hydro_limit(cfg, seed),
        "zero-cost" => zero_cost(cfg),
        "cross-formula" => cross_formula(cfg),
        "hminus1" => hminus1_check(cfg),
        "entropy" => entropy_check(cfg, seed),
        "resolvent" => resolvent_check(cfg),
        "energy" => energy_check(cfg, seed),
        "density" => density_experiment(cfg),
        other => Err(Error::Config(format!("unknown experiment '{other}'"))),
    }
}

/// Validates inputs, runs the check and writes `<out>/<name>.json`.
/// Exit codes: 0 pass, 2 bad input (nothing written), 3 I/O, 4 tolerance failure.
pub fn run_experiment(spec: &ExperimentSpec) -> Outcome {
    let fail = |code, e: Error| Outcome {
        code,
        report: None,
        artifacts: vec![],
        error: Some(e.to_string()),
    };
    let overrides = match &spec.config {
        None => None,
        Some(p) => match fs::read_to_string(p) {
            Ok(s) => Some(s),
            Err(e) => {
                return fail(
                    EXIT_INPUT,
                    Error::Config(format!("cannot read config {}: {e}", p.display())),
                )
            }
        },
    };
    let mut cfg = match resolve_config(&spec.name, overrides.as_deref()) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_INPUT, e),
    };
    if let Some(r) = spec.replicas {
        cfg.extra.insert("replicas".into(), r.to_string());
    }
    let report = match run_check(&spec.name, &cfg, spec.seed) {
        Ok(r) => r,
        Err(e @ Error::Io(_)) => return fail(EXIT_IO, e),
        Err(e) => return fail(EXIT_INPUT, e),
    };
    let file = spec.out.join(format!("{}.json", spec.name));
    let doc = json!({
        "experiment": spec.name,
        "seed": spec.seed,
        "pass": report.pass,
        "summary": report.summary,
        "details": report.details,
    });
    if let Err(e) = fs::create_dir_all(&spec.out).map_err(Error::from).and_then(|_| write_json(&doc, &file)) {
        return fail(EXIT_IO, e);
    }
    Outcome {
        code: if report.pass { EXIT_OK } else { EXIT_TOLERANCE },
        report: Some(report),
        artifacts: vec![file],
        error: None,
    }
}

fn extra_usize(cfg: &Config, key: &str, default: usize) -> Result<usize> {
    Ok(cfg
        .extra_list::<usize>(key)?
        .and_then(|v| v.first().copied())
        .unwrap_or(default))
}

fn basis_of(cfg: &Config) -> Result<TestBasis> {
    Ok(TestBasis::new(extra_usize(cfg, "K", 32)?, extra_usize(cfg, "L", 8)?))
}

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// sin(k pi (1 + u) / 2): vanishes at both ends.
pub fn sine_mode(k: usize, u: f64) -> f64 {
    (k as f64 * PI * (1.0 + u) / 2.0).sin()
}

/// Five smooth paths that stay inside (0, 1), each starting from its own
/// time-zero profile.
pub fn interior_paths(params: &ModelParams, grid: SpaceGrid, steps: usize) -> Vec<(&'static str, SpaceTimePath)> {
    let times = uniform_times(params.t, steps);
    let tt = params.t;
    let lin = |u: f64| params.linear_profile(u);
    let mk = |f: &dyn Fn(f64, f64) -> f64| SpaceTimePath::from_fn(times.clone(), grid, f);
    vec![
        ("bump", mk(&|t, u| lin(u) + 0.1 * (PI * t / tt).sin() * sine_mode(1, u))),
        ("ramp", mk(&|t, u| lin(u) + 0.08 * (t / tt) * sine_mode(2, u))),
        ("relax", mk(&|t, u| lin(u) + 0.1 * (PI * t / tt).cos() * sine_mode(1, u))),
        ("mixed", mk(&|t, u| {
            let s = t / tt;
            lin(u) + 0.05 * (1.0 - (2.0 * PI * s).cos()) * sine_mode(1, u) + 0.03 * s * sine_mode(3, u)
        })),
        ("swing", mk(&|t, u| {
            let s = t / tt;
            lin(u) + 0.12 * s * s * sine_mode(1, u) - 0.04 * (2.0 * PI * s).sin() * sine_mode(2, u)
        })),
    ]
}

/// Hydrodynamic evolution from the linear profile up to `t_hold`, then a
/// smooth excursion switched on over [t_hold, t_hold + ramp].
pub fn excursion_path(
    params: &ModelParams,
    coeffs: &TransportCoeffs,
    grid: SpaceGrid,
    steps: usize,
    t_hold: f64,
    ramp: f64,
    amplitude: f64,
) -> Result<(DensityField, SpaceTimePath)> {
    let gamma = crate::model::linear_profile(params, grid);
    let hydro = solve_hydro(&gamma, params, coeffs, params.t / steps as f64)?;
    let nodes = grid.nodes();
    let m = grid.len();
    let mut data = hydro.data().to_vec();
    for (n, &t) in hydro.times().iter().enumerate() {
        let s = ((t - t_hold) / ramp).clamp(0.0, 1.0);
        let phi = 0.5 * (1.0 - (PI * s).cos());
        for i in 0..m {
            data[n * m + i] += amplitude * phi * sine_mode(1, nodes[i]);
        }
    }
    Ok((gamma, SpaceTimePath::new(hydro.times().to_vec(), grid, data)?))
}

fn occupation_runs(
    params: &ModelParams,
    profile: &(dyn Fn(usize) -> f64 + Sync),
    replicas: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let n = params.n as f64;
    run_replicas(replicas, seed, |_, rng| {
        let init = LatticeConfig::sample(params, |u| profile(((u * n) + n - 1.0).round() as usize), rng);
        let mut avg = OccupationAverager::default();
        simulate_with(init, params, &TiltSpec::none(), rng, &mut avg)?;
        Ok(avg.into_means())
    })
}

fn per_site_z(runs: &[Vec<f64>], target: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let sites = target.len();
    let mut means = vec![];
    let mut ses = vec![];
    let mut zs = vec![];
    for i in 0..sites {
        let col: Vec<f64> = runs.iter().map(|r| r[i]).collect();
        let (m, se) = mean_se(&col);
        means.push(m);
        ses.push(se);
        zs.push((m - target[i]).abs() / se);
    }
    (means, ses, zs)
}

fn z_summary(zs: &[f64]) -> Value {
    let max = zs.iter().cloned().fold(0.0, f64::max);
    let over = zs.iter().filter(|z| **z >= 3.0).count();
    let rms = (zs.iter().map(|z| z * z).sum::<f64>() / zs.len() as f64).sqrt();
    json!({"max_z": max, "sites_over_3se": over, "rms_z": rms, "sites": zs.len()})
}

/// Unbiased reservoirs without drift: every site averages to rho.
pub fn equilibrium_check(cfg: &Config, seed: u64) -> Result<CheckReport> {
    let p = &cfg.params;
    if p.e != 0.0 || p.rho_minus != p.rho_plus {
        return Err(Error::Config("equilibrium-check needs E = 0 and rho_minus = rho_plus".into()));
    }
    let replicas = extra_usize(cfg, "replicas", 64)?;
    let rho = p.rho_minus;
    info!("equilibrium: N = {}, T = {}, {} replicas", p.n, p.t, replicas);
    let runs = occupation_runs(p, &|_| rho, replicas, seed)?;
    let (means, ses, zs) = per_site_z(&runs, &vec![rho; p.sites()]);
    let pass = zs.iter().all(|z| *z < 3.0);
    let s = z_summary(&zs);
    Ok(CheckReport {
        name: "equilibrium-check".into(),
        pass,
        summary: format!("max |mean - rho| / SE = {:.3} over {} sites", s["max_z"].as_f64().unwrap(), p.sites()),
        details: json!({"replicas": replicas, "stats": s, "mean": means, "se": ses}),
    })
}

fn log_mu(c: &LatticeConfig, phibar: &[f64]) -> f64 {
    c.bits()
        .iter()
        .zip(phibar)
        .map(|(&b, &f)| b as f64 * f - f.exp().ln_1p())
        .sum()
}

/// max over events of |mu(eta) r(eta -> eta') / (mu(eta') r(eta' -> eta)) - 1|.
pub fn detailed_balance_defect(params: &ModelParams, configs: usize, seed: u64) -> Result<f64> {
    let phibar = reversible_field(params)?.phibar;
    let mut rng = replica_rng(seed, u64::MAX);
    let tilt = TiltSpec::none();
    let mut worst: f64 = 0.0;
    for _ in 0..configs {
        let bits: Vec<u8> = (0..params.sites()).map(|_| rng.gen_range(0..2u8)).collect();
        let c = LatticeConfig::from_bits(&bits)?;
        let r = event_rates(&c, params, &tilt, 0.0)?;
        let mut events: Vec<(Event, f64)> = r
            .exchange
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > 0.0)
            .map(|(b, v)| (Event::Exchange(b), *v))
            .collect();
        events.push((Event::Flip(Side::Left), r.left));
        events.push((Event::Flip(Side::Right), r.right));
        let lm = log_mu(&c, &phibar);
        for (e, rate) in events {
            let mut d = c.clone();
            d.apply(e);
            let back = event_rates(&d, params, &tilt, 0.0)?;
            let rev = match e {
                Event::Exchange(b) => back.exchange[b],
                Event::Flip(Side::Left) => back.left,
                Event::Flip(Side::Right) => back.right,
            };
            let ratio = (lm + rate.ln() - log_mu(&d, &phibar) - rev.ln()).exp();
            worst = worst.max((ratio - 1.0).abs());
        }
    }
    Ok(worst)
}

/// E = E0: the product measure with the linear chemical potential is invariant.
pub fn reversible_check(cfg: &Config, seed: u64) -> Result<CheckReport> {
    let e0 = reversible_field(&cfg.params)?.e0;
    let mut p = cfg.params.clone();
    p.e = e0;
    let replicas = extra_usize(cfg, "replicas", 256)?;
    let configs = extra_usize(cfg, "configs", 10_000)?;
    let marg = reversible_marginals(&p)?;
    info!("reversible: N = {}, E0 = {e0}, {} replicas", p.n, replicas);
    let db = detailed_balance_defect(&p, configs, seed)?;
    let runs = occupation_runs(&p, &|i| marg[i], replicas, seed)?;
    let (means, ses, zs) = per_site_z(&runs, &marg);
    let s = z_summary(&zs);
    let pass = zs.iter().all(|z| *z < 3.0) && db <= 1e-12;
    Ok(CheckReport {
        name: "reversible-check".into(),
        pass,
        summary: format!(
            "max z = {:.3}, detailed balance defect {:.2e} on {} configs",
            s["max_z"].as_f64().unwrap(),
            db,
            configs
        ),
        details: json!({
            "E0": e0, "replicas": replicas, "stats": s, "detailed_balance_defect": db,
            "configs": configs, "mean": means, "se": ses, "marginals": marg,
        }),
    })
}

/// Ensemble-mean empirical density at T against the PDE for growing N.
pub fn hydro_limit(cfg: &Config, seed: u64) -> Result<CheckReport> {
    let sizes = cfg.extra_list::<usize>("sizes")?.unwrap_or(vec![128, 256, 512]);
    let g0 = cfg.extra_f64("gamma")?.unwrap_or(0.5);
    let replicas = extra_usize(cfg, "replicas", 64)?;
    let grid = cfg.grid();
    let coeffs = cfg.transport();
    let gamma = DensityField::constant(grid, g0);
    let pde = solve_hydro(&gamma, &cfg.params, &coeffs, cfg.params.t / cfg.steps() as f64)?.last();
    let mut rows = vec![];
    for &n in &sizes {
        let p = cfg.params.with_size(n);
        info!("hydro-limit: N = {n}");
        let dens = run_replicas(replicas, seed, |_, rng| {
            let init = LatticeConfig::sample(&p, |_| g0, rng);
            let (last, _) = simulate_with(init, &p, &TiltSpec::none(), rng, &mut ())?;
            Ok(empirical_density(&last, &p, grid))
        })?;
        let mut mean = vec![0.0; grid.len()];
        for d in &dens {
            for (a, v) in mean.iter_mut().zip(d.values()) {
                *a += v / replicas as f64;
            }
        }
        let l1 = DensityField::new(grid, mean)?.l1_distance(&pde);
        rows.push(json!({"N": n, "l1": l1}));
    }
    let l1s: Vec<f64> = rows.iter().map(|r| r["l1"].as_f64().unwrap()).collect();
    let decreasing = l1s.windows(2).all(|w| w[1] < w[0]);
    let last = *l1s.last().unwrap_or(&f64::INFINITY);
    Ok(CheckReport {
        name: "hydro-limit".into(),
        pass: decreasing && last < 0.05,
        summary: format!("L1 by N: {l1s:.4?}; decreasing = {decreasing}"),
        details: json!({"replicas": replicas, "rows": rows, "decreasing": decreasing}),
    })
}

/// The hydrodynamic path costs nothing by every route.
pub fn zero_cost(cfg: &Config) -> Result<CheckReport> {
    let p = &cfg.params;
    let coeffs = cfg.transport();
    let grid = cfg.grid();
    let gamma = DensityField::from_fn(grid, |u| p.linear_profile(u) + 0.1 * sine_mode(1, u));
    let path = solve_hydro(&gamma, p, &coeffs, p.t / cfg.steps() as f64)?;
    let control = rate_i_control(&path, &gamma, p, &coeffs)?;
    let var = rate_i_variational(&path, &gamma, &basis_of(cfg)?, p, &coeffs)?;
    let pass = control.value < 1e-6 && var.value < 1e-6;
    Ok(CheckReport {
        name: "zero-cost".into(),
        pass,
        summary: format!("control {:.3e}, variational {:.3e}", control.value, var.value),
        details: json!({"control": control, "variational": var}),
    })
}

/// Control, explicit momentum and variational routes on the interior family.
pub fn cross_formula(cfg: &Config) -> Result<CheckReport> {
    let p = &cfg.params;
    let coeffs = cfg.transport();
    let basis = basis_of(cfg)?;
    let mut rows = vec![];
    let mut pass = true;
    for (name, path) in interior_paths(p, cfg.grid(), cfg.steps()) {
        let gamma = path.field(0);
        let c = rate_i_control(&path, &gamma, p, &coeffs)?;
        let e = rate_i_explicit(&path, &gamma, p, &coeffs)?;
        let v = rate_i_variational(&path, &gamma, &basis, p, &coeffs)?;
        let rel_explicit = (c.value - e.value).abs() / c.value.max(1.0);
        let below = (c.value - v.value) / c.value;
        let ok = rel_explicit < 1e-3 && (0.0..=0.05).contains(&below);
        pass &= ok;
        rows.push(json!({
            "path": name, "control": c.value, "explicit": e.value, "variational": v.value,
            "rel_explicit": rel_explicit, "variational_shortfall": below, "ok": ok,
        }));
    }
    Ok(CheckReport {
        name: "cross-formula".into(),
        pass,
        summary: format!("{} paths, basis {}x{}", rows.len(), basis.k, basis.l),
        details: json!({"rows": rows}),
    })
}

/// The closed-form H^{-1} norm on constant and gradient momenta.
pub fn hminus1_check(cfg: &Config) -> Result<CheckReport> {
    let p = &cfg.params;
    let coeffs = cfg.transport();
    let grid = cfg.grid();
    let (_, path) = interior_paths(p, grid, cfg.steps()).swap_remove(0);
    let times = path.times().to_vec();
    let m = grid.len();
    let nodes = grid.nodes();

    let constant: Vec<f64> = times
        .iter()
        .flat_map(|&t| std::iter::repeat(0.3 + 0.2 * (PI * t).sin()).take(m))
        .collect();
    let c_norm = hminus1_norm(&MomentumField::new(times.clone(), grid, constant)?, &path, &coeffs)?;

    // G = (1 + t) sin(pi (1 + u)) (1 - u^2 / 2)
    let dg = |t: f64, u: f64| {
        let s = PI * (1.0 + u);
        (1.0 + t) * (PI * s.cos() * (1.0 - 0.5 * u * u) - u * s.sin())
    };
    let mut pv = Vec::with_capacity(times.len() * m);
    let mut oracle = 0.0;
    let ws = grid.trapezoid_weights();
    let wt = crate::grid::time_weights(times.len(), path.dt());
    for (n, &t) in times.iter().enumerate() {
        let pi = path.slice(n);
        let mut s = 0.0;
        for i in 0..m {
            let chi = coeffs.chi(pi[i]);
            let g = dg(t, nodes[i]);
            pv.push(chi * g);
            s += ws[i] * chi * g * g;
        }
        oracle += wt[n] * s;
    }
    let g_norm = hminus1_norm(&MomentumField::new(times, grid, pv)?, &path, &coeffs)?;
    let rel = (g_norm.value - oracle).abs() / oracle;
    let pass = c_norm.value.abs() < 1e-10 && rel < 1e-4;
    Ok(CheckReport {
        name: "hminus1".into(),
        pass,
        summary: format!("constant P: {:.2e}; gradient P relative error {:.2e}", c_norm.value, rel),
        details: json!({"constant": c_norm.value, "gradient": g_norm.value, "oracle": oracle, "relative": rel}),
    })
}

/// Relative entropy per site of the controlled lattice dynamics against the
/// cost of the path they are steered along.
pub fn entropy_check(cfg: &Config, seed: u64) -> Result<CheckReport> {
    let p = &cfg.params;
    let coeffs = cfg.transport();
    let grid = cfg.grid();
    let sizes = cfg.extra_list::<usize>("sizes")?.unwrap_or(vec![64, 128, 256]);
    let replicas = extra_usize(cfg, "replicas", 512)?;
    let (gamma, path) = excursion_path(p, &coeffs, grid, cfg.steps(), 0.05, 0.15, 0.15)?;
    let target = rate_i_control(&path, &gamma, p, &coeffs)?;
    let h = solve_control_h(&path, p, &coeffs)?;
    let tilt = TiltSpec::new(h);
    let last = path.last();
    let mut rows = vec![];
    for &n in &sizes {
        info!("entropy: N = {n}, {replicas} replicas");
        let pn = p.with_size(n);
        let (est, dens) = estimate_entropy_with_density(&pn, &tilt, &gamma, replicas, seed, &[p.t], grid)?;
        let gap = (est.estimate - target.value).abs();
        rows.push(json!({
            "N": n, "estimate": est.estimate, "se": est.se, "gap": gap,
            "density_l1_at_T": dens[0].l1_distance(&last),
        }));
    }
    let get = |r: &Value, k: &str| r[k].as_f64().unwrap();
    let shrinking = rows.windows(2).all(|w| {
        let slack = 2.0 * (get(&w[0], "se").powi(2) + get(&w[1], "se").powi(2)).sqrt();
        get(&w[1], "gap") <= get(&w[0], "gap") + slack
    });
    let final_rel = rows.last().map(|r| get(r, "gap") / target.value).unwrap_or(f64::INFINITY);
    Ok(CheckReport {
        name: "entropy".into(),
        pass: final_rel < 0.10 && shrinking,
        summary: format!(
            "I = {:.5}; estimates {:?}; final relative gap {:.3}",
            target.value,
            rows.iter().map(|r| get(r, "estimate")).collect::<Vec<_>>(),
            final_rel
        ),
        details: json!({"target": target, "rows": rows, "gap_shrinking": shrinking, "relative_gap": final_rel}),
    })
}

/// Smooth field vanishing at both ends, indexed by j.
pub fn resolvent_test_field(j: usize, u: f64) -> f64 {
    let j = j as f64;
    (1.0 - u * u) * (0.1 * j / 20.0 + j.cos() * u + ((1.0 + j / 4.0) * u + 0.3 * j).sin())
}

/// Least-squares slope of log(err) against log(h).
pub fn loglog_slope(h: &[f64], err: &[f64]) -> f64 {
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Neumann row sums and the intertwining of gradients under refinement.
pub fn resolvent_check(cfg: &Config) -> Result<CheckReport> {
    let eps = cfg.extra_f64("epsilon")?.unwrap_or(0.05);
    let grids = cfg.extra_list::<usize>("grids")?.unwrap_or(vec![32, 64, 128, 256, 512]);
    let fields = extra_usize(cfg, "fields", 20)?;
    let mut row_dev: f64 = 0.0;
    for e in [0.5, eps, 5e-3, 1e-4] {
        let k = resolvent_kernel(KernelKind::Neumann, e, cfg.grid())?;
        for i in 0..cfg.grid().len() {
            row_dev = row_dev.max((k.row_sum(i) - 1.0).abs());
        }
    }
    let mut errs = vec![vec![]; fields];
    let mut hs = vec![];
    for &m in &grids {
        let g = SpaceGrid::new(m);
        hs.push(g.h());
        let kd = resolvent_kernel(KernelKind::Dirichlet, eps, g)?;
        let kn = resolvent_kernel(KernelKind::Neumann, eps, g)?;
        for (j, e) in errs.iter_mut().enumerate() {
            let f: Vec<f64> = g.nodes().iter().map(|&u| resolvent_test_field(j, u)).collect();
            let lhs = gradient(&kd.apply(&f), g.h());
            let rhs = kn.apply(&gradient(&f, g.h()));
            e.push(lhs.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
    }
    let slopes: Vec<f64> = errs.iter().map(|e| loglog_slope(&hs, e)).collect();
    let min_slope = slopes.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(CheckReport {
        name: "resolvent".into(),
        pass: row_dev < 1e-8 && min_slope >= 1.8,
        summary: format!("Neumann row-sum deviation {row_dev:.2e}; min intertwining slope {min_slope:.3}"),
        details: json!({"row_sum_deviation": row_dev, "slopes": slopes, "h": hs, "errors": errs}),
    })
}

/// Random interior path with a few smooth modes, for convexity sampling.
pub fn random_path<R: Rng + ?Sized>(params: &ModelParams, grid: SpaceGrid, steps: usize, rng: &mut R) -> SpaceTimePath {
    let coef: Vec<(f64, f64, f64)> = (1..=3)
        .map(|_| (rng.gen_range(-0.06..0.06), rng.gen_range(0.0..3.0), rng.gen_range(0.0..PI)))
        .collect();
    SpaceTimePath::from_fn(uniform_times(params.t, steps), grid, |t, u| {
        let mut v = params.linear_profile(u);
        for (k, &(a, w, ph)) in coef.iter().enumerate() {
            v += a * (w * t + ph).cos() * sine_mode(k + 1, u);
        }
        v
    })
}

/// Variational energy against the explicit integral, and convexity of Q.
pub fn energy_check(cfg: &Config, seed: u64) -> Result<CheckReport> {
    let p = &cfg.params;
    let basis = basis_of(cfg)?;
    let mut rows = vec![];
    let mut pass = true;
    for (name, path) in interior_paths(p, cfg.grid(), cfg.steps()) {
        let q = energy_q(&path).value;
        let v = energy_q_variational(&path, &basis).value;
        let below = (q - v) / q;
        let ok = (-1e-10..=0.02).contains(&below);
        pass &= ok;
        rows.push(json!({"path": name, "energy": q, "variational": v, "shortfall": below, "ok": ok}));
    }
    let pairs = extra_usize(cfg, "pairs", 100)?;
    let mut rng = replica_rng(seed, 0);
    let small = SpaceGrid::new(64);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..pairs {
        let a = random_path(p, small, 50, &mut rng);
        let b = random_path(p, small, 50, &mut rng);
        let mid = SpaceTimePath::new(
            a.times().to_vec(),
            small,
            a.data().iter().zip(b.data()).map(|(x, y)| 0.5 * (x + y)).collect(),
        )?;
        let gap = energy_q(&mid).value - 0.5 * (energy_q(&a).value + energy_q(&b).value);
        worst = worst.max(gap);
    }
    let convex = worst <= 1e-8;
    Ok(CheckReport {
        name: "energy".into(),
        pass: pass && convex,
        summary: format!(
            "shortfalls {:?}; worst convexity gap {worst:.2e} over {pairs} pairs",
            rows.iter().map(|r| r["shortfall"].as_f64().unwrap()).collect::<Vec<_>>()
        ),
        details: json!({"rows": rows, "convexity_worst_gap": worst, "pairs": pairs}),
    })
}

/// Smoothed approximations of the "bump" path converge in L1 and in cost.
pub fn density_experiment(cfg: &Config) -> Result<CheckReport> {
    let p = &cfg.params;
    let coeffs = cfg.transport();
    let eps = cfg
        .extra_list::<f64>("epsilons")?
        .unwrap_or(vec![1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0, 1.0 / 512.0, 1.0 / 1024.0]);
    let (_, path) = interior_paths(p, cfg.grid(), cfg.steps()).swap_remove(0);
    let gamma = path.field(0);
    let rep = density_check(&path, &gamma, &eps, p, &coeffs)?;
    let fin = rep.finest().ok_or_else(|| Error::Config("empty epsilon list".into()))?;
    let rel = (fin.rate - rep.target).abs() / rep.target;
    Ok(CheckReport {
        name: "density".into(),
        pass: rel < 0.02 && fin.l1_distance < 1e-2,
        summary: format!(
            "target {:.6}; finest eps {}: rate {:.6} ({:.2}% off), L1 {:.2e}",
            rep.target,
            fin.epsilon,
            fin.rate,
            100.0 * rel,
            fin.l1_distance
        ),
        details: json!({"report": rep, "relative_error": rel}),
    })
}

/// True when `dir` contains nothing (or does not exist).
pub fn is_empty_dir(dir: &Path) -> bool {
    fs::read_dir(dir).map(|mut d| d.next().is_none()).unwrap_or(true)
}
