//! Cost of a smooth path by three routes: optimal control, explicit momentum
//! formula and the variational supremum over growing bases.
//!
//! cargo run --release --example rate_functional

use wasep::experiment::interior_paths;
use wasep::rate::{energy_q, energy_q_variational, rate_i_explicit, rate_i_control, rate_i_variational, TestBasis};
use wasep::{ModelParams, SpaceGrid, TransportCoeffs};

fn main() -> wasep::Result<()> {
    let params = ModelParams::new(100, 1.0, 0.2, 0.8, 1.0)?;
    let coeffs = TransportCoeffs::wasep();
    for (name, path) in interior_paths(&params, SpaceGrid::new(256), 200) {
        let gamma = path.field(0);
        let c = rate_i_control(&path, &gamma, &params, &coeffs)?;
        let e = rate_i_explicit(&path, &gamma, &params, &coeffs)?;
        println!("{name}: control {:.6}  explicit {:.6}  energy {:.4}", c.value, e.value, energy_q(&path).value);
        for (k, l) in [(4, 2), (8, 4), (16, 8), (32, 8)] {
            let b = TestBasis::new(k, l);
            let v = rate_i_variational(&path, &gamma, &b, &params, &coeffs)?;
            let q = energy_q_variational(&path, &b);
            println!("    basis {k:>2}x{l}: I {:.6}  Q {:.4}", v.value, q.value);
        }
    }
    Ok(())
}
