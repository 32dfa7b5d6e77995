//! Lattice dynamics against the hydrodynamic limit: ensemble mean of the
//! empirical density at t = 0.1 for growing N.
//!
//! cargo run --release --example lattice_simulation
//! WASEP_WORKERS=4 cargo run --release --example lattice_simulation

use wasep::hydro::solve_hydro;
use wasep::micro::{empirical_density, run_replicas, simulate_with, LatticeConfig, SimStats, TiltSpec};
use wasep::{DensityField, ModelParams, SpaceGrid, TransportCoeffs};

fn main() -> wasep::Result<()> {
    let grid = SpaceGrid::new(128);
    let base = ModelParams::new(32, 1.0, 0.2, 0.8, 0.1)?;
    let gamma = DensityField::constant(grid, 0.5);
    let pde = solve_hydro(&gamma, &base, &TransportCoeffs::wasep(), 1e-3)?.last();
    let replicas = 32;

    for n in [32, 64, 128, 256] {
        let p = base.with_size(n);
        let t0 = std::time::Instant::now();
        let runs = run_replicas(replicas, 7, |_, rng| {
            let init = LatticeConfig::sample(&p, |_| 0.5, rng);
            let (last, stats): (_, SimStats) = simulate_with(init, &p, &TiltSpec::none(), rng, &mut ())?;
            Ok((empirical_density(&last, &p, grid), stats.events))
        })?;
        let mut mean = vec![0.0; grid.len()];
        for (d, _) in &runs {
            for (a, v) in mean.iter_mut().zip(d.values()) {
                *a += v / replicas as f64;
            }
        }
        let events: u64 = runs.iter().map(|r| r.1 as u64).sum();
        let l1 = DensityField::new(grid, mean)?.l1_distance(&pde);
        println!(
            "N = {n:>4}: L1 to PDE {l1:.4}  ({events} events in {:.2?})",
            t0.elapsed()
        );
    }
    Ok(())
}
