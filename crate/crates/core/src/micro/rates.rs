use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::rate::ControlField;

use super::lattice::LatticeConfig;

/// Optional extra field: under a tilt the bulk drift E/2 becomes E/2 + grad H.
#[derive(Debug, Clone, Default)]
pub struct TiltSpec {
    h: Option<Arc<ControlField>>,
}

impl TiltSpec {
    pub fn none() -> Self {
        TiltSpec { h: None }
    }

    pub fn new(h: ControlField) -> Self {
        TiltSpec { h: Some(Arc::new(h)) }
    }

    pub fn control(&self) -> Option<&ControlField> {
        self.h.as_deref()
    }

    pub fn is_none(&self) -> bool {
        self.h.is_none()
    }
}

/// grad H at every bond midpoint (x + 1/2)/N, on the time nodes of the
/// control; linear in t between nodes.
#[derive(Debug, Clone)]
pub(crate) struct BondTilt {
    pub times: Vec<f64>,
    pub bonds: usize,
    pub g: Vec<f64>,
}

impl BondTilt {
    pub fn new(tilt: &TiltSpec, params: &ModelParams) -> Result<Option<Self>> {
        let Some(h) = tilt.control() else {
            return Ok(None);
        };
        let times = h.times().to_vec();
        if times.is_empty() {
            return Err(Error::InvalidParams("control field has no time slices".into()));
        }
        if times[0].abs() > 1e-12 {
            return Err(Error::InvalidParams("control must start at t = 0".into()));
        }
        if times.len() > 1 && times[times.len() - 1] < params.t * (1.0 - 1e-12) {
            return Err(Error::InvalidParams(format!(
                "control ends at {} before the horizon {}",
                times[times.len() - 1],
                params.t
            )));
        }
        let n = params.n as f64;
        let bonds = params.sites() - 1;
        let grid = h.grid();
        let mut g = Vec::with_capacity(times.len() * bonds);
        for k in 0..times.len() {
            let row = h.grad_slice(k);
            for b in 0..bonds {
                let u = (b as f64 - (n - 1.0) + 0.5) / n;
                g.push(grid.interpolate(row, u));
            }
        }
        Ok(Some(BondTilt { times, bonds, g }))
    }

    pub fn slabs(&self) -> usize {
        self.times.len().saturating_sub(1).max(1)
    }

    pub fn node_row(&self, k: usize) -> &[f64] {
        let k = k.min(self.times.len() - 1);
        &self.g[k * self.bonds..(k + 1) * self.bonds]
    }

    /// Index of the slab [times[k], times[k+1]) containing t.
    pub fn slab_of(&self, t: f64) -> usize {
        if self.times.len() < 2 {
            return 0;
        }
        let dt = (self.times[self.times.len() - 1] - self.times[0]) / (self.times.len() - 1) as f64;
        let k = ((t - self.times[0]) / dt).floor();
        (k.max(0.0) as usize).min(self.times.len() - 2)
    }

    pub fn at(&self, b: usize, t: f64) -> f64 {
        if self.times.len() < 2 {
            return self.g[b];
        }
        let k = self.slab_of(t);
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        let a = self.node_row(k)[b];
        let c = self.node_row(k + 1)[b];
        a + (c - a) * w
    }
}

/// Rates of all events from one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    /// Per bond b (sites b, b+1); zero when the two sites agree.
    pub exchange: Vec<f64>,
    pub left: f64,
    pub right: f64,
}

impl RateTable {
    pub fn total(&self) -> f64 {
        self.exchange.iter().sum::<f64>() + self.left + self.right
    }
}

/// (N^2/2) exp(-(E + 2g) s / 2N) with s = eta(b+1) - eta(b).
#[inline]
pub(crate) fn bulk_rate(prefactor: f64, e: f64, g: f64, n: f64, s: i8) -> f64 {
    if s == 0 {
        0.0
    } else {
        prefactor * (-(e + 2.0 * g) * s as f64 / (2.0 * n)).exp()
    }
}

/// (N^2/2) c_-(zeta) and (N^2/2) c_+(zeta).
pub(crate) fn flip_rates(params: &ModelParams, left: u8, right: u8) -> (f64, f64) {
    let n = params.n as f64;
    let pre = n * n / 2.0;
    let a = (params.e / (2.0 * n)).exp();
    let (rm, rp) = (params.rho_minus, params.rho_plus);
    let cm = if left == 0 { rm * a } else { (1.0 - rm) / a };
    let cp = if right == 0 { rp / a } else { (1.0 - rp) * a };
    (pre * cm, pre * cp)
}

pub(crate) fn check_overflow(params: &ModelParams, gmax: f64) -> Result<()> {
    let n = params.n as f64;
    let worst = n * n / 2.0 * ((params.e.abs() + 2.0 * gmax) / (2.0 * n)).exp() * n;
    if !worst.is_finite() || worst > 1e300 {
        return Err(Error::RateOverflow(worst));
    }
    Ok(())
}

pub fn event_rates(
    config: &LatticeConfig,
    params: &ModelParams,
    tilt: &TiltSpec,
    t: f64,
) -> Result<RateTable> {
    params.validate()?;
    if config.len() != params.sites() {
        return Err(Error::InvalidParams(format!(
            "configuration has {} sites, expected {}",
            config.len(),
            params.sites()
        )));
    }
    let bt = BondTilt::new(tilt, params)?;
    let gmax = bt
        .as_ref()
        .map_or(0.0, |b| b.g.iter().fold(0.0f64, |a, v| a.max(v.abs())));
    check_overflow(params, gmax)?;
    let n = params.n as f64;
    let pre = n * n / 2.0;
    let exchange = (0..params.sites() - 1)
        .map(|b| {
            let g = bt.as_ref().map_or(0.0, |bt| bt.at(b, t));
            bulk_rate(pre, params.e, g, n, config.bond_step(b))
        })
        .collect();
    let (left, right) = flip_rates(params, config.get(0), config.get(config.len() - 1));
    Ok(RateTable {
        exchange,
        left,
        right,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lattice_rates() {
        let p = ModelParams::new(2, 0.0, 0.3, 0.7, 1.0).unwrap();
        let c = LatticeConfig::from_bits(&[1, 0, 0]).unwrap();
        let r = event_rates(&c, &p, &TiltSpec::none(), 0.0).unwrap();
        assert_eq!(r.exchange, vec![2.0, 0.0]);
        // left site occupied: 2 (1 - 0.3); right site empty: 2 * 0.7
        assert!((r.left - 1.4).abs() < 1e-15);
        assert!((r.right - 1.4).abs() < 1e-15);
        let c = LatticeConfig::from_bits(&[0, 0, 0]).unwrap();
        let r = event_rates(&c, &p, &TiltSpec::none(), 0.0).unwrap();
        assert!((r.left - 0.6).abs() < 1e-15);
    }

    #[test]
    fn wrong_size_rejected() {
        let p = ModelParams::new(3, 0.0, 0.3, 0.7, 1.0).unwrap();
        let c = LatticeConfig::empty(4);
        assert!(event_rates(&c, &p, &TiltSpec::none(), 0.0).is_err());
    }
}
