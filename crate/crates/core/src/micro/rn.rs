use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::quad::phi1;

use super::lattice::{Event, LatticeConfig, Side, TrajectoryLog};
use super::rates::{BondTilt, TiltSpec};
use super::sim::Observer;

/// Running log-likelihood ratio of the tilted dynamics against the untilted
/// one: sum over jumps of log(rate ratio) minus the integrated excess of the
/// total rate. Only bulk rates differ, so only bonds with eta(b) != eta(b+1)
/// contribute, and the compensator is integrated exactly per bond.
#[derive(Debug, Clone)]
pub struct RnAccumulator {
    tables: Arc<Tables>,
    n: f64,
    pre: f64,
    slab: usize,
    step: Vec<i8>,
    /// Cumulative table value of the open interval of each bond at its start.
    opened: Vec<f64>,
    jump: f64,
    compensator: f64,
}

/// Shared per-node data, indexed by (node * bonds + bond) * 2 + [s > 0].
#[derive(Debug)]
struct Tables {
    tilt: BondTilt,
    /// e^a with a = -(E + 2g) s / 2N at the node
    exp_a: Vec<f64>,
    /// d a / dt on the slab starting at the node
    beta: Vec<f64>,
    /// int_0^{t_k} (e^{a(t)} - e^{a0}) dt
    cum: Vec<f64>,
    exp_a0: [f64; 2],
}

impl Tables {
    fn new(tilt: BondTilt, e: f64, n: f64) -> Self {
        let bonds = tilt.bonds;
        let nodes = tilt.times.len();
        let len = nodes * bonds * 2;
        let mut a = vec![0.0; len];
        for k in 0..nodes {
            let row = tilt.node_row(k);
            for b in 0..bonds {
                for (j, s) in [-1.0, 1.0].into_iter().enumerate() {
                    a[(k * bonds + b) * 2 + j] = -(e + 2.0 * row[b]) * s / (2.0 * n);
                }
            }
        }
        let exp_a = a.iter().map(|v| v.exp()).collect();
        let mut beta = vec![0.0; len];
        for k in 0..nodes.saturating_sub(1) {
            let dt = tilt.times[k + 1] - tilt.times[k];
            for i in 0..bonds * 2 {
                let idx = k * bonds * 2 + i;
                beta[idx] = (a[idx + bonds * 2] - a[idx]) / dt;
            }
        }
        let exp_a0 = [(e / (2.0 * n)).exp(), (-e / (2.0 * n)).exp()];
        let mut t = Tables {
            tilt,
            exp_a,
            beta,
            cum: vec![0.0; len],
            exp_a0,
        };
        for k in 1..nodes {
            let dt = t.tilt.times[k] - t.tilt.times[k - 1];
            for i in 0..bonds * 2 {
                let prev = (k - 1) * bonds * 2 + i;
                t.cum[prev + bonds * 2] = t.cum[prev] + t.partial(prev, i & 1, dt);
            }
        }
        t
    }

    /// int over [t_k, t_k + x] of (e^{a(t)} - e^{a0}) at table index idx.
    #[inline]
    fn partial(&self, idx: usize, j: usize, x: f64) -> f64 {
        x * (self.exp_a[idx] * phi1(self.beta[idx] * x) - self.exp_a0[j])
    }
}

impl RnAccumulator {
    pub fn new(params: &ModelParams, tilt: &TiltSpec) -> Result<Self> {
        let bt = BondTilt::new(tilt, params)?.ok_or(Error::MissingTilt)?;
        let n = params.n as f64;
        Ok(RnAccumulator {
            tables: Arc::new(Tables::new(bt, params.e, n)),
            n,
            pre: n * n / 2.0,
            slab: 0,
            step: Vec::new(),
            opened: Vec::new(),
            jump: 0.0,
            compensator: 0.0,
        })
    }

    fn advance(&mut self, t: f64) {
        let times = &self.tables.tilt.times;
        while self.slab + 2 < times.len() && t >= times[self.slab + 1] {
            self.slab += 1;
        }
    }

    fn cumulative(&self, b: usize, s: i8, t: f64) -> f64 {
        let tb = &self.tables;
        let j = usize::from(s > 0);
        let idx = (self.slab * tb.tilt.bonds + b) * 2 + j;
        tb.cum[idx] + tb.partial(idx, j, t - tb.tilt.times[self.slab])
    }

    fn grad(&self, b: usize, t: f64) -> f64 {
        let bt = &self.tables.tilt;
        let k = self.slab;
        let g0 = bt.node_row(k)[b];
        if bt.times.len() < 2 {
            return g0;
        }
        let g1 = bt.node_row(k + 1)[b];
        let w = (t - bt.times[k]) / (bt.times[k + 1] - bt.times[k]);
        g0 + (g1 - g0) * w
    }

    fn refresh(&mut self, b: usize, t: f64, c: &LatticeConfig) {
        let s = c.bond_step(b);
        let old = self.step[b];
        if s == old {
            return;
        }
        if old != 0 {
            self.compensator += self.pre * (self.cumulative(b, old, t) - self.opened[b]);
        }
        if s != 0 {
            self.opened[b] = self.cumulative(b, s, t);
        }
        self.step[b] = s;
    }

    /// log dP^H / dP of the trajectory so far.
    pub fn value(&self) -> f64 {
        self.jump - self.compensator
    }

    pub fn jump_part(&self) -> f64 {
        self.jump
    }

    pub fn compensator_part(&self) -> f64 {
        self.compensator
    }
}

impl Observer for RnAccumulator {
    fn start(&mut self, t: f64, c: &LatticeConfig) {
        let bonds = self.tables.tilt.bonds;
        self.slab = 0;
        self.advance(t);
        self.step = (0..bonds).map(|b| c.bond_step(b)).collect();
        self.opened = (0..bonds)
            .map(|b| match self.step[b] {
                0 => 0.0,
                s => self.cumulative(b, s, t),
            })
            .collect();
        self.jump = 0.0;
        self.compensator = 0.0;
    }

    fn after_event(&mut self, t: f64, e: Event, c: &LatticeConfig) {
        self.advance(t);
        let bonds = self.tables.tilt.bonds;
        match e {
            Event::Exchange(b) => {
                // the rate ratio is exp(-s g / N) with s the step before the swap
                let s = self.step[b] as f64;
                self.jump -= s * self.grad(b, t) / self.n;
                for k in b.saturating_sub(1)..(b + 2).min(bonds) {
                    self.refresh(k, t, c);
                }
            }
            Event::Flip(Side::Left) => self.refresh(0, t, c),
            Event::Flip(Side::Right) => self.refresh(bonds - 1, t, c),
        }
    }

    fn finish(&mut self, t_end: f64, _c: &LatticeConfig) {
        self.advance(t_end);
        for b in 0..self.tables.tilt.bonds {
            let s = self.step[b];
            if s != 0 {
                self.compensator += self.pre * (self.cumulative(b, s, t_end) - self.opened[b]);
            }
            self.step[b] = 0;
        }
    }
}

/// Pathwise log dP^{N,H} / dP^N of a recorded trajectory.
pub fn log_rn_derivative(traj: &TrajectoryLog, params: &ModelParams, tilt: &TiltSpec) -> Result<f64> {
    let mut acc = RnAccumulator::new(params, tilt)?;
    if traj.initial.len() != params.sites() {
        return Err(Error::InvalidParams("trajectory does not match the lattice size".into()));
    }
    let mut c = traj.initial.clone();
    acc.start(0.0, &c);
    for &(t, e) in &traj.events {
        c.apply(e);
        acc.after_event(t, e, &c);
    }
    acc.finish(traj.t_end, &c);
    Ok(acc.value())
}
