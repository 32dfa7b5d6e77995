use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::integrate;

const PANELS: usize = 16;

/// The bump iota(s) = exp(-1/(s(1-s))) / Z on (0, 1) and the switch
/// j(t) = int_0^t iota, scaled to width `epsilon`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MollifierSpec {
    pub epsilon: f64,
    norm: f64,
}

fn bump(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        (-1.0 / (s * (1.0 - s))).exp()
    }
}

impl MollifierSpec {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidParams(format!("mollifier width {epsilon} must be positive")));
        }
        Ok(MollifierSpec {
            epsilon,
            norm: integrate(bump, 0.0, 1.0, PANELS),
        })
    }

    /// iota on the unit interval.
    pub fn iota(&self, s: f64) -> f64 {
        bump(s) / self.norm
    }

    /// j(t): 0 for t <= 0, 1 for t >= 1, nondecreasing.
    pub fn switch(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else if t >= 1.0 {
            1.0
        } else if t <= 0.5 {
            integrate(bump, 0.0, t, PANELS) / self.norm
        } else {
            // by symmetry of the bump
            1.0 - integrate(bump, t, 1.0, PANELS) / self.norm
        }
    }

    /// iota_eps(t) = iota(t / eps) / eps
    pub fn iota_eps(&self, t: f64) -> f64 {
        self.iota(t / self.epsilon) / self.epsilon
    }

    /// j_eps(t) = eps j(t / eps)
    pub fn j_eps(&self, t: f64) -> f64 {
        self.epsilon * self.switch(t / self.epsilon)
    }

    /// beta_eps(t) = j_eps(t - a): 0 up to a, eps from a + eps on.
    pub fn beta(&self, t: f64, a: f64) -> f64 {
        self.j_eps(t - a)
    }

    /// Gauss-Legendre nodes s in (0, 1) with weights folding in iota; the
    /// weights are renormalized to sum to one so constants are reproduced exactly.
    pub fn rule(&self, panels: usize) -> Vec<(f64, f64)> {
        let (x, w) = crate::quad::gauss_legendre(8);
        let h = 1.0 / panels as f64;
        let mut out = Vec::with_capacity(8 * panels);
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * h;
            for (xi, wi) in x.iter().zip(&w) {
                let s = mid + 0.5 * h * xi;
                out.push((s, 0.5 * h * wi * self.iota(s)));
            }
        }
        let total: f64 = out.iter().map(|p| p.1).sum();
        out.iter_mut().for_each(|p| p.1 /= total);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_mass_and_monotone_switch() {
        let m = MollifierSpec::new(0.1).unwrap();
        assert!((integrate(|s| m.iota(s), 0.0, 1.0, 32) - 1.0).abs() < 1e-10);
        let mut last = 0.0;
        for k in 0..=100 {
            let j = m.switch(k as f64 / 100.0);
            assert!(j >= last - 1e-15);
            last = j;
        }
        assert!((m.switch(0.5) - 0.5).abs() < 1e-12);
        assert!((m.beta(0.35, 0.2) - 0.1).abs() < 1e-15);
        assert_eq!(m.beta(0.2, 0.2), 0.0);
    }
}
