use rand::{Rng, SeedableRng};
use rand_distr::Exp1;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::DensityField;
use crate::grid::SpaceGrid;
use crate::model::ModelParams;

use super::density::empirical_density_of;
use super::lattice::{Event, LatticeConfig, Side, TrajectoryLog};
use super::rates::{bulk_rate, check_overflow, flip_rates, BondTilt, TiltSpec};

/// Hooks called by the simulation loop. `before_event` sees the state just
/// before a jump at time t, `after_event` the state just after.
pub trait Observer {
    fn start(&mut self, _t: f64, _config: &LatticeConfig) {}
    fn before_event(&mut self, _t: f64, _config: &LatticeConfig) {}
    fn after_event(&mut self, _t: f64, _event: Event, _config: &LatticeConfig) {}
    fn finish(&mut self, _t_end: f64, _config: &LatticeConfig) {}
}

impl Observer for () {}

impl<O: Observer + ?Sized> Observer for &mut O {
    fn start(&mut self, t: f64, c: &LatticeConfig) {
        (**self).start(t, c)
    }
    fn before_event(&mut self, t: f64, c: &LatticeConfig) {
        (**self).before_event(t, c)
    }
    fn after_event(&mut self, t: f64, e: Event, c: &LatticeConfig) {
        (**self).after_event(t, e, c)
    }
    fn finish(&mut self, t: f64, c: &LatticeConfig) {
        (**self).finish(t, c)
    }
}

impl<A: Observer, B: Observer> Observer for (A, B) {
    fn start(&mut self, t: f64, c: &LatticeConfig) {
        self.0.start(t, c);
        self.1.start(t, c);
    }
    fn before_event(&mut self, t: f64, c: &LatticeConfig) {
        self.0.before_event(t, c);
        self.1.before_event(t, c);
    }
    fn after_event(&mut self, t: f64, e: Event, c: &LatticeConfig) {
        self.0.after_event(t, e, c);
        self.1.after_event(t, e, c);
    }
    fn finish(&mut self, t: f64, c: &LatticeConfig) {
        self.0.finish(t, c);
        self.1.finish(t, c);
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SimStats {
    pub events: u64,
    /// Candidate events drawn from the bounding rates, accepted or not.
    pub proposals: u64,
}

/// Stream `replica` of the generator seeded by `seed`.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

pub fn simulate(
    initial: LatticeConfig,
    params: &ModelParams,
    tilt: &TiltSpec,
    seed: u64,
) -> Result<TrajectoryLog> {
    let mut rng = replica_rng(seed, 0);
    let mut log = LogRecorder::default();
    simulate_with(initial, params, tilt, &mut rng, &mut log)?;
    Ok(log.into_log(params.t))
}

/// Exact sampling on [0, T] by uniformization: candidate events arrive at a
/// constant rate that dominates every bond and boundary rate on the current
/// time slab, and each candidate is accepted with probability actual / bound.
/// With a tilt the exponent of each bulk rate is linear in t on a slab of the
/// control, so the larger endpoint value is a valid bound.
pub fn simulate_with<R: Rng + ?Sized, O: Observer>(
    initial: LatticeConfig,
    params: &ModelParams,
    tilt: &TiltSpec,
    rng: &mut R,
    observer: &mut O,
) -> Result<(LatticeConfig, SimStats)> {
    params.validate()?;
    if initial.len() != params.sites() {
        return Err(Error::InvalidParams(format!(
            "configuration has {} sites, expected {}",
            initial.len(),
            params.sites()
        )));
    }
    let bt = BondTilt::new(tilt, params)?;
    let gmax = bt
        .as_ref()
        .map_or(0.0, |b| b.g.iter().fold(0.0f64, |a, v| a.max(v.abs())));
    check_overflow(params, gmax)?;

    let mut config = initial;
    let bonds = params.sites() - 1;
    let last = bonds;
    let n = params.n as f64;
    let pre = n * n / 2.0;
    let e = params.e;
    let t_end = params.t;
    let mut stats = SimStats::default();
    // untilted bulk rates indexed by s + 1
    let flat = [bulk_rate(pre, e, 0.0, n, -1), 0.0, bulk_rate(pre, e, 0.0, n, 1)];
    let flip_max = {
        let (a, b) = flip_rates(params, 0, 0);
        let (c, d) = flip_rates(params, 1, 1);
        a.max(b).max(c).max(d)
    };
    let mut slope = SlabRates::new(bonds);

    observer.start(0.0, &config);
    let slabs = bt.as_ref().map_or(1, |b| b.slabs());
    let mut t = 0.0;
    for k in 0..slabs {
        let (tau0, tau1) = match &bt {
            Some(b) if b.times.len() > 1 => {
                slope.load(b.node_row(k), b.node_row(k + 1), b.times[k + 1] - b.times[k], e, n, pre);
                (b.times[k], b.times[k + 1])
            }
            Some(b) => {
                slope.load(b.node_row(0), b.node_row(0), 1.0, e, n, pre);
                (0.0, t_end)
            }
            None => (0.0, t_end),
        };
        let tilted = bt.is_some();
        let stop = if k + 1 == slabs { t_end } else { tau1.min(t_end) };
        if stop <= t {
            continue;
        }
        let bulk_max = if tilted { slope.max } else { flat[0].max(flat[2]) };
        let bulk_total = bulk_max * bonds as f64;
        let total = bulk_total + 2.0 * flip_max;

        loop {
            let w: f64 = rng.sample::<f64, _>(Exp1) / total;
            if t + w >= stop {
                break;
            }
            t += w;
            stats.proposals += 1;
            let x = rng.gen::<f64>() * total;
            let event = if x < bulk_total {
                // the fractional part is a fresh uniform for the acceptance test
                let y = x / bulk_max;
                let b = (y as usize).min(bonds - 1);
                let st = config.bond_step(b);
                if st == 0 {
                    continue;
                }
                let actual = if tilted {
                    slope.rate(b, st, t - tau0)
                } else {
                    flat[(st + 1) as usize]
                };
                if (y - b as f64) * bulk_max >= actual {
                    continue;
                }
                Event::Exchange(b)
            } else {
                let y = (x - bulk_total) / flip_max;
                let (l, r) = flip_rates(params, config.get(0), config.get(last));
                let (side, actual, frac) = if y < 1.0 {
                    (Side::Left, l, y)
                } else {
                    (Side::Right, r, y - 1.0)
                };
                if frac * flip_max >= actual {
                    continue;
                }
                Event::Flip(side)
            };
            observer.before_event(t, &config);
            config.apply(event);
            stats.events += 1;
            observer.after_event(t, event, &config);
        }
        t = stop;
    }
    observer.finish(t_end, &config);
    Ok((config, stats))
}

/// Per-bond exponents of the tilted bulk rates on one slab, for s = -1 and
/// s = +1: rate = pre exp(a + beta x) with x the time since the slab start.
struct SlabRates {
    a: Vec<[f64; 2]>,
    beta: Vec<[f64; 2]>,
    /// Largest bulk rate on the slab.
    max: f64,
    pre: f64,
}

impl SlabRates {
    fn new(bonds: usize) -> Self {
        SlabRates {
            a: vec![[0.0; 2]; bonds],
            beta: vec![[0.0; 2]; bonds],
            max: 0.0,
            pre: 0.0,
        }
    }

    fn load(&mut self, g0: &[f64], g1: &[f64], width: f64, e: f64, n: f64, pre: f64) {
        self.pre = pre;
        let mut top = f64::NEG_INFINITY;
        for b in 0..self.a.len() {
            for (j, s) in [-1.0, 1.0].into_iter().enumerate() {
                let a0 = -(e + 2.0 * g0[b]) * s / (2.0 * n);
                let a1 = -(e + 2.0 * g1[b]) * s / (2.0 * n);
                self.a[b][j] = a0;
                self.beta[b][j] = (a1 - a0) / width;
                top = top.max(a0).max(a1);
            }
        }
        self.max = pre * top.exp();
    }

    #[inline]
    fn rate(&self, b: usize, s: i8, x: f64) -> f64 {
        let j = usize::from(s > 0);
        self.pre * (self.a[b][j] + self.beta[b][j] * x).exp()
    }
}

/// Keeps every event.
#[derive(Debug, Default)]
pub struct LogRecorder {
    initial: Option<LatticeConfig>,
    events: Vec<(f64, Event)>,
}

impl LogRecorder {
    pub fn into_log(self, t_end: f64) -> TrajectoryLog {
        TrajectoryLog {
            initial: self.initial.unwrap_or_else(|| LatticeConfig::empty(0)),
            events: self.events,
            t_end,
        }
    }
}

impl Observer for LogRecorder {
    fn start(&mut self, _t: f64, c: &LatticeConfig) {
        self.initial = Some(c.clone());
        self.events.clear();
    }
    fn after_event(&mut self, t: f64, e: Event, _c: &LatticeConfig) {
        self.events.push((t, e));
    }
}

/// Empirical density at fixed times; the state at time t includes jumps at t.
#[derive(Debug, Clone)]
pub struct SnapshotRecorder {
    times: Vec<f64>,
    n: usize,
    grid: SpaceGrid,
    next: usize,
    snapshots: Vec<DensityField>,
}

impl SnapshotRecorder {
    pub fn new(times: Vec<f64>, n: usize, grid: SpaceGrid) -> Self {
        SnapshotRecorder {
            times,
            n,
            grid,
            next: 0,
            snapshots: Vec::new(),
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn snapshots(&self) -> &[DensityField] {
        &self.snapshots
    }

    pub fn into_snapshots(self) -> Vec<DensityField> {
        self.snapshots
    }

    fn record_until(&mut self, t: f64, inclusive: bool, c: &LatticeConfig) {
        while self.next < self.times.len()
            && (self.times[self.next] < t || (inclusive && self.times[self.next] <= t))
        {
            self.snapshots.push(empirical_density_of(c, self.n, self.grid));
            self.next += 1;
        }
    }
}

impl Observer for SnapshotRecorder {
    fn start(&mut self, _t: f64, _c: &LatticeConfig) {
        self.next = 0;
        self.snapshots.clear();
    }
    fn before_event(&mut self, t: f64, c: &LatticeConfig) {
        self.record_until(t, false, c);
    }
    fn finish(&mut self, t_end: f64, c: &LatticeConfig) {
        self.record_until(t_end, true, c);
    }
}

/// Time-averaged occupation of every site over [start, T].
#[derive(Debug, Clone, Default)]
pub struct OccupationAverager {
    t0: f64,
    last: Vec<f64>,
    occupied: Vec<f64>,
    means: Vec<f64>,
}

impl OccupationAverager {
    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn into_means(self) -> Vec<f64> {
        self.means
    }

    fn touch(&mut self, i: usize, t: f64, now: u8) {
        // the site just changed, so it was occupied before iff it is empty now
        if now == 0 {
            self.occupied[i] += t - self.last[i];
        }
        self.last[i] = t;
    }
}

impl Observer for OccupationAverager {
    fn start(&mut self, t: f64, c: &LatticeConfig) {
        self.t0 = t;
        self.last = vec![t; c.len()];
        self.occupied = vec![0.0; c.len()];
        self.means.clear();
    }
    fn after_event(&mut self, t: f64, e: Event, c: &LatticeConfig) {
        match e {
            Event::Exchange(b) => {
                self.touch(b, t, c.get(b));
                self.touch(b + 1, t, c.get(b + 1));
            }
            Event::Flip(Side::Left) => self.touch(0, t, c.get(0)),
            Event::Flip(Side::Right) => {
                let i = c.len() - 1;
                self.touch(i, t, c.get(i))
            }
        }
    }
    fn finish(&mut self, t_end: f64, c: &LatticeConfig) {
        let span = t_end - self.t0;
        self.means = (0..c.len())
            .map(|i| {
                let mut occ = self.occupied[i];
                if c.get(i) == 1 {
                    occ += t_end - self.last[i];
                }
                if span > 0.0 {
                    occ / span
                } else {
                    c.get(i) as f64
                }
            })
            .collect();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_lattice_only_flips_first() {
        let p = ModelParams::new(8, 0.0, 0.999, 0.999, 0.05).unwrap();
        let log = simulate(LatticeConfig::full(p.sites()), &p, &TiltSpec::none(), 1).unwrap();
        log.validate().unwrap();
        if let Some(&(_, e)) = log.events.first() {
            assert!(matches!(e, Event::Flip(_)));
        }
    }

    #[test]
    fn same_seed_same_trajectory() {
        let p = ModelParams::new(6, 1.0, 0.2, 0.7, 0.3).unwrap();
        let c = LatticeConfig::sample(&p, |_| 0.5, &mut replica_rng(3, 9));
        let a = simulate(c.clone(), &p, &TiltSpec::none(), 5).unwrap();
        let b = simulate(c, &p, &TiltSpec::none(), 5).unwrap();
        assert_eq!(a.events, b.events);
        assert!(!a.events.is_empty());
    }
}
