//! Stationary density between two reservoirs, for a few field strengths.
//!
//! cargo run --release --example stationary_profile

use wasep::hydro::solve_stationary_full;
use wasep::{ModelParams, SpaceGrid, TransportCoeffs};

fn main() -> wasep::Result<()> {
    let coeffs = TransportCoeffs::wasep();
    let grid = SpaceGrid::new(256);
    println!("{:>6} {:>14} {:>10} {:>10} {:>10}", "E", "flux J", "rho(-0.5)", "rho(0)", "rho(0.5)");
    for e in [-4.0, -1.0, 0.0, 1.0, 4.0] {
        let params = ModelParams::new(100, e, 0.2, 0.8, 1.0)?;
        let sol = solve_stationary_full(&params, &coeffs, grid)?;
        let p = &sol.profile;
        println!(
            "{e:>6} {:>14.6e} {:>10.5} {:>10.5} {:>10.5}",
            sol.flux,
            p.at(-0.5),
            p.at(0.0),
            p.at(0.5)
        );
    }
    Ok(())
}
