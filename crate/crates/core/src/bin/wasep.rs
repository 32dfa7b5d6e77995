use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use wasep::experiment::{
    excursion_path, run_experiment, ExperimentSpec, EXIT_INPUT, EXIT_IO, EXIT_OK, EXPERIMENTS,
};
use wasep::field::uniform_times;
use wasep::hydro::{solve_hydro_with, solve_stationary_full, HydroOptions};
use wasep::io::{
    read_field_csv, read_path_csv, write_field_csv, write_file, write_json, write_path_csv,
    write_snapshots_csv, Config,
};
use wasep::micro::{
    estimate_entropy_rate, run_replicas, simulate_with, LatticeConfig, SnapshotRecorder, TiltSpec,
};
use wasep::rate::{rate_i_explicit, rate_i_control, rate_i_variational, solve_control_h, TestBasis};
use wasep::smoothing::{
    blend_with_hydro, density_check, prepend_hydro, resolvent_smooth, time_mollify, MollifierSpec,
};
use wasep::{DensityField, Error, SpaceTimePath};

#[derive(Parser)]
#[command(name = "wasep", version, about = "Boundary-driven weakly asymmetric exclusion toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// key = value file with N, E, rho_minus, rho_plus, T, M (and optional coeffs, steps)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    replicas: Option<usize>,
    /// Rate route for `rate`: control | explicit | variational
    #[arg(long, global = true)]
    method: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Stationary profile and its flux
    Stationary,
    /// Hydrodynamic evolution from a profile (default: the config's `gamma`
    /// constant, else the linear profile)
    Hydro {
        #[arg(long)]
        gamma: Option<PathBuf>,
    },
    /// Lattice trajectories with density snapshots at the config's time steps
    Simulate {
        #[arg(long)]
        gamma: Option<PathBuf>,
    },
    /// Relative entropy per site of the dynamics steered along a path
    Entropy {
        /// Path CSV (t,u,value); defaults to a hydrodynamic start plus an excursion
        #[arg(long)]
        path: Option<PathBuf>,
    },
    /// Cost of a path
    Rate {
        #[arg(long)]
        path: PathBuf,
        /// Initial profile CSV (u,value); defaults to the path at t = 0
        #[arg(long)]
        gamma: Option<PathBuf>,
        #[arg(long, default_value = "32x8")]
        basis: String,
    },
    /// Path smoothing constructions
    Smooth {
        #[arg(long)]
        path: PathBuf,
        #[arg(long, value_enum, default_value = "chain")]
        op: SmoothOp,
        /// One epsilon for single ops, a comma separated list for `chain`
        #[arg(long, value_delimiter = ',', default_value = "0.0625")]
        eps: Vec<f64>,
    },
    /// Named acceptance experiment
    Experiment {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(EXPERIMENTS))]
        name: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SmoothOp {
    Prepend,
    Blend,
    Mollify,
    Resolvent,
    Chain,
}

fn code_of(e: &Error) -> u8 {
    match e {
        Error::Io(_) => EXIT_IO as u8,
        _ => EXIT_INPUT as u8,
    }
}

fn load_config(cli: &Cli) -> wasep::Result<Config> {
    match &cli.config {
        Some(p) => Config::load(p),
        None => Err(Error::Config("--config is required for this subcommand".into())),
    }
}

fn initial_profile(cfg: &Config, file: Option<&Path>) -> wasep::Result<DensityField> {
    if let Some(f) = file {
        return read_field_csv(File::open(f)?);
    }
    Ok(match cfg.extra_f64("gamma")? {
        Some(c) => DensityField::constant(cfg.grid(), c),
        None => wasep::model::linear_profile(&cfg.params, cfg.grid()),
    })
}

fn read_path(p: &Path) -> wasep::Result<SpaceTimePath> {
    read_path_csv(File::open(p)?)
}

fn out_file(out: &Path, name: &str) -> wasep::Result<PathBuf> {
    fs::create_dir_all(out)?;
    Ok(out.join(name))
}

fn run(cli: &Cli) -> wasep::Result<u8> {
    match &cli.cmd {
        Cmd::Experiment { name } => {
            let o = run_experiment(&ExperimentSpec {
                name: name.clone(),
                config: cli.config.clone(),
                seed: cli.seed,
                replicas: cli.replicas,
                out: cli.out.clone(),
            });
            if let Some(e) = &o.error {
                eprintln!("error: {e}");
            }
            if let Some(r) = &o.report {
                println!("{}: {} ({})", r.name, if r.pass { "PASS" } else { "FAIL" }, r.summary);
            }
            return Ok(o.code as u8);
        }
        Cmd::Stationary => {
            let cfg = load_config(cli)?;
            let sol = solve_stationary_full(&cfg.params, &cfg.transport(), cfg.grid())?;
            let csv = out_file(&cli.out, "stationary.csv")?;
            write_file(&csv, |w| write_field_csv(&sol.profile, w))?;
            write_json(&sol, &out_file(&cli.out, "stationary.json")?)?;
            println!("flux J = {:.10e}; wrote {}", sol.flux, csv.display());
        }
        Cmd::Hydro { gamma } => {
            let cfg = load_config(cli)?;
            let g = initial_profile(&cfg, gamma.as_deref())?;
            let opts = HydroOptions::new(cfg.params.t / cfg.steps() as f64);
            let sol = solve_hydro_with(&g, &cfg.params, &cfg.transport(), &opts)?;
            let csv = out_file(&cli.out, "hydro.csv")?;
            write_file(&csv, |w| write_path_csv(&sol.path, w))?;
            write_json(&sol.diagnostics, &out_file(&cli.out, "hydro.json")?)?;
            println!("wrote {}", csv.display());
        }
        Cmd::Simulate { gamma } => {
            let cfg = load_config(cli)?;
            let g = initial_profile(&cfg, gamma.as_deref())?;
            let p = &cfg.params;
            let times = uniform_times(p.t, cfg.steps());
            let replicas = cli.replicas.unwrap_or(1);
            let snaps = run_replicas(replicas, cli.seed, |_, rng| {
                let init = LatticeConfig::sample(p, |u| g.at(u), rng);
                let mut rec = SnapshotRecorder::new(times.clone(), p.n, cfg.grid());
                simulate_with(init, p, &TiltSpec::none(), rng, &mut rec)?;
                Ok(rec.into_snapshots())
            })?;
            let mean: Vec<DensityField> = (0..times.len())
                .map(|k| {
                    let mut acc = vec![0.0; cfg.grid().len()];
                    for s in &snaps {
                        for (a, v) in acc.iter_mut().zip(s[k].values()) {
                            *a += v / replicas as f64;
                        }
                    }
                    DensityField::new(cfg.grid(), acc.into_iter().map(|v| v.clamp(0.0, 1.0)).collect())
                })
                .collect::<wasep::Result<_>>()?;
            let csv = out_file(&cli.out, "snapshots.csv")?;
            write_file(&csv, |w| write_snapshots_csv(&times, &mean, w))?;
            println!("{} replica(s); wrote {}", replicas, csv.display());
        }
        Cmd::Entropy { path } => {
            let cfg = load_config(cli)?;
            let coeffs = cfg.transport();
            let (gamma, pi) = match path {
                Some(f) => {
                    let pi = read_path(f)?;
                    (pi.field(0), pi)
                }
                None => excursion_path(&cfg.params, &coeffs, cfg.grid(), cfg.steps(), 0.05, 0.15, 0.15)?,
            };
            let h = solve_control_h(&pi, &cfg.params, &coeffs)?;
            let cost = rate_i_control(&pi, &gamma, &cfg.params, &coeffs)?;
            let est = estimate_entropy_rate(
                &cfg.params,
                &TiltSpec::new(h),
                &gamma,
                cli.replicas.unwrap_or(64),
                cli.seed,
            )?;
            let file = out_file(&cli.out, "entropy.json")?;
            write_json(&est, &file)?;
            println!(
                "entropy per site {:.6} +- {:.6} (cost of the path {:.6}); wrote {}",
                est.estimate,
                est.se,
                cost.value,
                file.display()
            );
        }
        Cmd::Rate { path, gamma, basis } => {
            let cfg = load_config(cli)?;
            let coeffs = cfg.transport();
            let pi = read_path(path)?;
            let g = match gamma {
                Some(f) => read_field_csv(File::open(f)?)?,
                None => pi.field(0),
            };
            let method = cli.method.as_deref().unwrap_or("control");
            let report = match method {
                "control" => rate_i_control(&pi, &g, &cfg.params, &coeffs)?,
                "explicit" => rate_i_explicit(&pi, &g, &cfg.params, &coeffs)?,
                "variational" => {
                    let (k, l) = basis
                        .split_once('x')
                        .and_then(|(k, l)| Some((k.parse().ok()?, l.parse().ok()?)))
                        .ok_or_else(|| Error::Config(format!("basis '{basis}' is not KxL")))?;
                    rate_i_variational(&pi, &g, &TestBasis::new(k, l), &cfg.params, &coeffs)?
                }
                other => return Err(Error::Config(format!("unknown method '{other}'"))),
            };
            let file = out_file(&cli.out, "rate.json")?;
            write_json(&report, &file)?;
            println!("I = {:.10e} ({method}); wrote {}", report.value, file.display());
        }
        Cmd::Smooth { path, op, eps } => {
            let cfg = load_config(cli)?;
            let coeffs = cfg.transport();
            let p = &cfg.params;
            let pi = read_path(path)?;
            let gamma = pi.field(0);
            let e = *eps.first().ok_or_else(|| Error::Config("--eps is empty".into()))?;
            let smoothed = match op {
                SmoothOp::Chain => {
                    let rep = density_check(&pi, &gamma, eps, p, &coeffs)?;
                    write_json(&rep, &out_file(&cli.out, "smooth.json")?)?;
                    for r in &rep.rows {
                        println!("eps {:<10} L1 {:.4e}  rate {:.6e}", r.epsilon, r.l1_distance, r.rate);
                    }
                    println!("target {:.6e}", rep.target);
                    return Ok(EXIT_OK as u8);
                }
                SmoothOp::Prepend => prepend_hydro(&pi, &gamma, e, p, &coeffs)?,
                SmoothOp::Blend => {
                    let hydro = wasep::hydro::solve_hydro(&gamma, p, &coeffs, pi.dt())?;
                    blend_with_hydro(&pi, &hydro, e)?
                }
                SmoothOp::Mollify => time_mollify(&pi, &MollifierSpec::new(e)?, 0.0)?,
                SmoothOp::Resolvent => resolvent_smooth(&pi, &MollifierSpec::new(e)?, 0.0, p)?,
            };
            let csv = out_file(&cli.out, "smooth.csv")?;
            write_file(&csv, |w| write_path_csv(&smoothed, w))?;
            let l1 = smoothed.l1_distance(&pi)?;
            write_json(&json!({"epsilon": e, "l1_distance": l1}), &out_file(&cli.out, "smooth.json")?)?;
            println!("L1 distance {l1:.4e}; wrote {}", csv.display());
        }
    }
    Ok(EXIT_OK as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(code_of(&e))
        }
    }
}
