use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Occupation numbers on the sites x = -N+1..=N-1, stored at index x + N - 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeConfig {
    occ: Vec<u8>,
}

impl LatticeConfig {
    pub fn empty(sites: usize) -> Self {
        LatticeConfig {
            occ: vec![0; sites],
        }
    }

    pub fn full(sites: usize) -> Self {
        LatticeConfig {
            occ: vec![1; sites],
        }
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        if bits.len() < 3 {
            return Err(Error::InvalidParams("a lattice needs at least 3 sites".into()));
        }
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidParams(format!("occupation {b} is not 0 or 1")));
        }
        Ok(LatticeConfig {
            occ: bits.to_vec(),
        })
    }

    /// Independent Bernoulli(profile(x/N)) occupations.
    pub fn sample<R: Rng + ?Sized, F: Fn(f64) -> f64>(
        params: &ModelParams,
        profile: F,
        rng: &mut R,
    ) -> Self {
        let n = params.n as f64;
        let occ = (0..params.sites())
            .map(|i| {
                let u = (i as f64 - (n - 1.0)) / n;
                u8::from(rng.gen::<f64>() < profile(u))
            })
            .collect();
        LatticeConfig { occ }
    }

    pub fn len(&self) -> usize {
        self.occ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occ.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.occ
    }

    /// Occupation of the site at index i (not coordinate).
    pub fn get(&self, i: usize) -> u8 {
        self.occ[i]
    }

    /// eta(b+1) - eta(b) for bond b.
    pub fn bond_step(&self, b: usize) -> i8 {
        self.occ[b + 1] as i8 - self.occ[b] as i8
    }

    pub fn particles(&self) -> usize {
        self.occ.iter().map(|&b| b as usize).sum()
    }

    pub fn apply(&mut self, event: Event) {
        match event {
            Event::Exchange(b) => self.occ.swap(b, b + 1),
            Event::Flip(Side::Left) => self.occ[0] ^= 1,
            Event::Flip(Side::Right) => {
                let last = self.occ.len() - 1;
                self.occ[last] ^= 1
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Side {
    /// The site -(N-1), in contact with the rho_minus reservoir.
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Event {
    /// Swap across bond b, i.e. between site indices b and b+1.
    Exchange(usize),
    /// Creation or annihilation at an endpoint site.
    Flip(Side),
}

/// Initial state and every event of one trajectory on [0, t_end].
#[derive(Debug, Clone)]
pub struct TrajectoryLog {
    pub initial: LatticeConfig,
    pub events: Vec<(f64, Event)>,
    pub t_end: f64,
}

impl TrajectoryLog {
    /// State after all events.
    pub fn final_config(&self) -> LatticeConfig {
        let mut c = self.initial.clone();
        for &(_, e) in &self.events {
            c.apply(e);
        }
        c
    }

    /// State at time t (events at times <= t applied).
    pub fn config_at(&self, t: f64) -> LatticeConfig {
        let mut c = self.initial.clone();
        for &(s, e) in &self.events {
            if s > t {
                break;
            }
            c.apply(e);
        }
        c
    }

    /// Checks increasing times in [0, t_end] and that every exchange moves a particle.
    pub fn validate(&self) -> Result<()> {
        let mut c = self.initial.clone();
        let mut last = 0.0;
        for (k, &(t, e)) in self.events.iter().enumerate() {
            if !(t > last || (k == 0 && t >= 0.0)) || t > self.t_end {
                return Err(Error::InvalidParams(format!("event {k} at time {t} out of order")));
            }
            if let Event::Exchange(b) = e {
                if b + 1 >= c.len() || c.bond_step(b) == 0 {
                    return Err(Error::InvalidParams(format!("event {k} exchanges equal sites")));
                }
            }
            c.apply(e);
            last = t;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apply_events() {
        let mut c = LatticeConfig::from_bits(&[1, 0, 0]).unwrap();
        c.apply(Event::Exchange(0));
        assert_eq!(c.bits(), &[0, 1, 0]);
        c.apply(Event::Flip(Side::Right));
        assert_eq!(c.bits(), &[0, 1, 1]);
        assert_eq!(c.particles(), 2);
        assert_eq!(c.bond_step(0), 1);
        assert!(LatticeConfig::from_bits(&[0, 2, 0]).is_err());
    }
}
