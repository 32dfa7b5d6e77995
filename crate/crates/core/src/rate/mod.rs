//! Energy, the functional J_H and the dynamical cost I_T(pi | gamma), computed
//! through the optimal control H, the explicit momentum formula and a finite
//! variational basis.

mod basis;
mod control;
mod energy;
mod functional;

use std::collections::BTreeMap;

use serde::Serialize;

pub use basis::{TestBasis, TimeModes};
pub use control::{
    solve_control_h, solve_control_h_full, ControlField, ControlSolution, MomentumField,
};
pub use energy::{energy_q, energy_q_variational};
pub use functional::{
    hminus1_norm, hminus1_norm_variational, j_hat, j_hat_with_offset, rate_i_explicit, rate_i_explicit_with,
    rate_i_control, rate_i_variational,
};

/// Floor below which 1/chi integrands are capped and flagged infinite.
pub const DELTA_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Flags {
    /// A capped 1/chi integrand was hit; the value is a lower surrogate for +inf.
    pub infinite: bool,
    /// The Gram matrix needed a ridge to be factorized.
    pub ridge: bool,
    /// Two evaluations that should agree differ beyond tolerance.
    pub mismatch: bool,
}

impl Flags {
    pub fn merge(self, other: Flags) -> Flags {
        Flags {
            infinite: self.infinite || other.infinite,
            ridge: self.ridge || other.ridge,
            mismatch: self.mismatch || other.mismatch,
        }
    }
}

/// A scalar together with its overflow / regularization flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Flagged {
    pub value: f64,
    pub flags: Flags,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub value: f64,
    pub residuals: BTreeMap<String, f64>,
    pub flags: Flags,
}

impl RateReport {
    fn new(value: f64) -> Self {
        RateReport {
            value,
            residuals: BTreeMap::new(),
            flags: Flags::default(),
        }
    }

    fn residual(mut self, key: &str, v: f64) -> Self {
        self.residuals.insert(key.to_string(), v);
        self
    }
}

/// Central differences in time, second-order one-sided at the ends.
pub(crate) fn time_derivative(path: &crate::field::SpaceTimePath) -> Vec<f64> {
    let nt = path.n_times();
    let m = path.grid().len();
    let dt = path.dt();
    let mut out = vec![0.0; nt * m];
    if nt < 2 {
        return out;
    }
    let s = |n: usize| path.slice(n);
    for n in 0..nt {
        let row = &mut out[n * m..(n + 1) * m];
        for i in 0..m {
            row[i] = if nt == 2 {
                (s(1)[i] - s(0)[i]) / dt
            } else if n == 0 {
                (-3.0 * s(0)[i] + 4.0 * s(1)[i] - s(2)[i]) / (2.0 * dt)
            } else if n == nt - 1 {
                (3.0 * s(n)[i] - 4.0 * s(n - 1)[i] + s(n - 2)[i]) / (2.0 * dt)
            } else {
                (s(n + 1)[i] - s(n - 1)[i]) / (2.0 * dt)
            };
        }
    }
    out
}

/// Discrete version of int f (g)' du with g the gradient samples, written in
/// summation-by-parts form so that constant f is integrated exactly.
pub(crate) fn sbp_integral(f: &[f64], g: &[f64]) -> f64 {
    let m = f.len() - 1;
    let mut s = f[m] * g[m] - f[0] * g[0];
    for i in 0..m {
        s -= (f[i + 1] - f[i]) * 0.5 * (g[i + 1] + g[i]);
    }
    s
}
