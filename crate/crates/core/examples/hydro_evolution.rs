//! Relaxation of a flat profile towards the stationary one under the
//! hydrodynamic equation, with the mass balance at the walls.
//!
//! cargo run --release --example hydro_evolution

use wasep::hydro::{face_fluxes, solve_hydro_with, solve_stationary, HydroOptions};
use wasep::{DensityField, ModelParams, SpaceGrid, TransportCoeffs};

fn main() -> wasep::Result<()> {
    let params = ModelParams::new(100, 1.0, 0.2, 0.8, 0.5)?;
    let coeffs = TransportCoeffs::wasep();
    let grid = SpaceGrid::new(128);
    let gamma = DensityField::constant(grid, 0.5);
    let sol = solve_hydro_with(&gamma, &params, &coeffs, &HydroOptions::new(0.005))?;
    let stat = solve_stationary(&params, &coeffs, grid)?;
    let path = &sol.path;

    println!("{:>6} {:>10} {:>12} {:>14}", "t", "mass", "d mass/dt", "sup |rho-rhobar|");
    for n in (0..path.n_times()).step_by(10) {
        let f = path.field(n);
        let flux = face_fluxes(f.values(), grid.h(), params.e, &coeffs);
        // d/dt int rho = F(+1) - F(-1)
        let rate = flux[flux.len() - 1] - flux[0];
        println!(
            "{:>6.3} {:>10.6} {:>12.6} {:>14.3e}",
            path.times()[n],
            f.integral(),
            rate,
            f.sup_distance(&stat)
        );
    }
    println!("max step residual {:.2e}", sol.diagnostics.max_residual);
    Ok(())
}
