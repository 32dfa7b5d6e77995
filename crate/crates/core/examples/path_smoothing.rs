//! Smooth interior approximations of a path: L1 distance and cost as the
//! master epsilon shrinks.
//!
//! cargo run --release --example path_smoothing

use wasep::experiment::interior_paths;
use wasep::smoothing::density_check;
use wasep::{ModelParams, SpaceGrid, TransportCoeffs};

fn main() -> wasep::Result<()> {
    let params = ModelParams::new(100, 1.0, 0.2, 0.8, 1.0)?;
    let (_, path) = interior_paths(&params, SpaceGrid::new(128), 4096).swap_remove(0);
    let eps: Vec<f64> = (3..=9).map(|k| 0.5f64.powi(k)).collect();
    let rep = density_check(&path, &path.field(0), &eps, &params, &TransportCoeffs::wasep())?;
    println!("target cost {:.6}", rep.target);
    println!("{:>12} {:>12} {:>12}", "eps", "L1", "cost");
    for r in &rep.rows {
        println!("{:>12.3e} {:>12.4e} {:>12.6}", r.epsilon, r.l1_distance, r.rate);
    }
    Ok(())
}
