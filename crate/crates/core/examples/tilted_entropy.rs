//! Steer the lattice along a prescribed path with the optimal control and
//! compare the relative entropy per site with the cost of the path.
//!
//! cargo run --release --example tilted_entropy

use wasep::experiment::excursion_path;
use wasep::micro::{estimate_entropy_with_density, TiltSpec};
use wasep::rate::{rate_i_control, solve_control_h};
use wasep::{ModelParams, SpaceGrid, TransportCoeffs};

fn main() -> wasep::Result<()> {
    let params = ModelParams::new(64, 1.0, 0.2, 0.8, 0.2)?;
    let coeffs = TransportCoeffs::wasep();
    let grid = SpaceGrid::new(128);
    // hydrodynamic on [0, 0.05], then a bump grows in over 0.15
    let (gamma, path) = excursion_path(&params, &coeffs, grid, 200, 0.05, 0.15, 0.15)?;
    let cost = rate_i_control(&path, &gamma, &params, &coeffs)?.value;
    let tilt = TiltSpec::new(solve_control_h(&path, &params, &coeffs)?);
    println!("cost of the path: {cost:.5}");

    for n in [32, 64, 128] {
        let p = params.with_size(n);
        let (est, dens) = estimate_entropy_with_density(&p, &tilt, &gamma, 64, 3, &[p.t], grid)?;
        println!(
            "N = {n:>4}: entropy/N = {:.5} +- {:.5}, L1(density(T), path(T)) = {:.4}",
            est.estimate,
            est.se,
            dens[0].l1_distance(&path.last())
        );
    }
    Ok(())
}
