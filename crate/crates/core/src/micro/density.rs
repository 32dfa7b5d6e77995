use crate::field::DensityField;
use crate::grid::SpaceGrid;
use crate::model::ModelParams;

use super::lattice::LatticeConfig;

/// Sum of eta(x) times the indicator of [x/N - 1/2N, x/N + 1/2N), averaged
/// over the cell [u_i - h/2, u_i + h/2] of each grid node (clipped at +-1).
/// The trapezoid integral of the result is exactly #particles / N.
pub fn empirical_density(config: &LatticeConfig, params: &ModelParams, grid: SpaceGrid) -> DensityField {
    empirical_density_of(config, params.n, grid)
}

pub fn empirical_density_of(config: &LatticeConfig, n: usize, grid: SpaceGrid) -> DensityField {
    let bits = config.bits();
    let mut prefix = Vec::with_capacity(bits.len() + 1);
    prefix.push(0u32);
    for &b in bits {
        prefix.push(prefix[prefix.len() - 1] + b as u32);
    }
    let nf = n as f64;
    let cum = |u: f64| -> f64 {
        let p = (u * nf + nf - 0.5).clamp(0.0, bits.len() as f64);
        let j = (p.floor() as usize).min(bits.len());
        let frac = p - j as f64;
        let partial = if j < bits.len() { frac * bits[j] as f64 } else { 0.0 };
        (prefix[j] as f64 + partial) / nf
    };
    let h = grid.h();
    let values = grid
        .nodes()
        .iter()
        .map(|&u| {
            let a = (u - h / 2.0).max(-1.0);
            let b = (u + h / 2.0).min(1.0);
            ((cum(b) - cum(a)) / (b - a)).clamp(0.0, 1.0)
        })
        .collect();
    DensityField::new(grid, values).expect("cell averages lie in [0, 1]")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_and_empty() {
        let g = SpaceGrid::new(16);
        let full = empirical_density_of(&LatticeConfig::full(7), 4, g);
        // blocks cover [-7/8, 7/8]; the interior is full
        assert!((full.at(0.0) - 1.0).abs() < 1e-15);
        let empty = empirical_density_of(&LatticeConfig::empty(7), 4, g);
        assert!(empty.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_particle_mass() {
        let mut bits = vec![0u8; 7];
        bits[3] = 1;
        let c = LatticeConfig::from_bits(&bits).unwrap();
        for m in [4, 10, 64, 257] {
            let f = empirical_density_of(&c, 4, SpaceGrid::new(m));
            assert!((f.integral() - 0.25).abs() < 1e-14, "m = {m}");
        }
    }
}
