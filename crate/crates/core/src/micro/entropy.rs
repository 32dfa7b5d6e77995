use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::DensityField;
use crate::grid::SpaceGrid;
use crate::model::ModelParams;

use super::lattice::LatticeConfig;
use super::rates::TiltSpec;
use super::rn::RnAccumulator;
use super::sim::{replica_rng, simulate_with, SnapshotRecorder};

/// Environment variable fixing the number of worker threads.
pub const WORKERS_ENV: &str = "WASEP_WORKERS";

/// Thread pool sized by `WASEP_WORKERS` when set, else by rayon's default.
pub fn worker_pool() -> rayon::ThreadPool {
    let threads = std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
}

/// Runs `f(replica, rng)` for every replica on its own stream of `seed`;
/// results come back in replica order.
pub fn run_replicas<T, F>(replicas: usize, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> Result<T> + Sync,
{
    worker_pool().install(|| {
        (0..replicas as u64)
            .into_par_iter()
            .map(|r| f(r, &mut replica_rng(seed, r)))
            .collect()
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyEstimate {
    /// N^{-1} times the sample mean of log dP^H/dP under P^H.
    pub estimate: f64,
    pub se: f64,
    pub replicas: usize,
    #[serde(rename = "N")]
    pub n: usize,
}

/// Relative entropy per site of the tilted law with respect to the untilted
/// one, both started from Bernoulli(gamma(x/N)).
pub fn estimate_entropy_rate(
    params: &ModelParams,
    tilt: &TiltSpec,
    gamma: &DensityField,
    replicas: usize,
    seed: u64,
) -> Result<EntropyEstimate> {
    Ok(estimate_entropy_with_density(params, tilt, gamma, replicas, seed, &[], gamma.grid())?.0)
}

/// As above, also returning the ensemble-mean empirical density at `times`.
pub fn estimate_entropy_with_density(
    params: &ModelParams,
    tilt: &TiltSpec,
    gamma: &DensityField,
    replicas: usize,
    seed: u64,
    times: &[f64],
    grid: SpaceGrid,
) -> Result<(EntropyEstimate, Vec<DensityField>)> {
    if replicas < 2 {
        return Err(Error::TooFewReplicas(replicas));
    }
    if tilt.is_none() {
        return Err(Error::MissingTilt);
    }
    params.validate()?;
    let proto = RnAccumulator::new(params, tilt)?;
    let runs = run_replicas(replicas, seed, |_, rng| {
        let init = LatticeConfig::sample(params, |u| gamma.at(u), rng);
        let mut obs = (proto.clone(), SnapshotRecorder::new(times.to_vec(), params.n, grid));
        simulate_with(init, params, tilt, rng, &mut obs)?;
        Ok((obs.0.value(), obs.1.into_snapshots()))
    })?;
    let n = params.n as f64;
    let r = replicas as f64;
    let mean = runs.iter().map(|x| x.0).sum::<f64>() / r;
    let var = runs.iter().map(|x| (x.0 - mean).powi(2)).sum::<f64>() / (r - 1.0);
    let mut dens = Vec::with_capacity(times.len());
    for k in 0..times.len() {
        let mut acc = vec![0.0; grid.len()];
        for run in &runs {
            for (a, v) in acc.iter_mut().zip(run.1[k].values()) {
                *a += v / r;
            }
        }
        let acc = acc.into_iter().map(|v: f64| v.clamp(0.0, 1.0)).collect();
        dens.push(DensityField::new(grid, acc)?);
    }
    Ok((
        EntropyEstimate {
            estimate: mean / n,
            se: (var / r).sqrt() / n,
            replicas,
            n: params.n,
        },
        dens,
    ))
}
