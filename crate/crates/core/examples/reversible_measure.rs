//! At E = E0 the product measure with a linear chemical potential is
//! invariant. Compare long-run site occupations with its marginals.
//!
//! cargo run --release --example reversible_measure

use wasep::experiment::mean_se;
use wasep::micro::{run_replicas, simulate_with, LatticeConfig, OccupationAverager, TiltSpec};
use wasep::model::{reversible_field, reversible_marginals};
use wasep::ModelParams;

fn main() -> wasep::Result<()> {
    let mut params = ModelParams::new(16, 0.0, 0.2, 0.8, 20.0)?;
    params.e = reversible_field(&params)?.e0;
    let marg = reversible_marginals(&params)?;
    println!("E0 = {:.6}", params.e);

    let runs = run_replicas(64, 11, |_, rng| {
        let init = LatticeConfig::sample(&params, |_| 0.5, rng);
        let mut avg = OccupationAverager::default();
        simulate_with(init, &params, &TiltSpec::none(), rng, &mut avg)?;
        Ok(avg.into_means())
    })?;
    println!("{:>4} {:>9} {:>9} {:>8}", "x", "p(x)", "MC", "z");
    let n = params.n as i64;
    for (i, p) in marg.iter().enumerate() {
        let col: Vec<f64> = runs.iter().map(|r| r[i]).collect();
        let (m, se) = mean_se(&col);
        println!("{:>4} {p:>9.4} {m:>9.4} {:>8.2}", i as i64 - n + 1, (m - p) / se);
    }
    Ok(())
}
