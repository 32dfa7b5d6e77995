use crate::field::SpaceTimePath;
use crate::grid::{gradient, time_weights};
use crate::model::chi0;

use super::basis::{maximize_quadratic, separable_gram};
use super::{Flagged, Flags, TestBasis, DELTA_FLOOR};

/// 1/2 int int (grad pi)^2 / chi0(pi), with the integrand capped at 1/DELTA_FLOOR.
pub fn energy_q(path: &SpaceTimePath) -> Flagged {
    let grid = path.grid();
    let ws = grid.trapezoid_weights();
    let wt = time_weights(path.n_times(), path.dt());
    let cap = 1.0 / DELTA_FLOOR;
    let mut flags = Flags::default();
    let mut total = 0.0;
    for (n, wtn) in wt.iter().enumerate() {
        let pi = path.slice(n);
        let g = gradient(pi, grid.h());
        let mut s = 0.0;
        for i in 0..pi.len() {
            let g2 = g[i] * g[i];
            if g2 == 0.0 {
                continue;
            }
            let c = chi0(pi[i]);
            let v = if c <= 0.0 { f64::INFINITY } else { g2 / c };
            let v = if v > cap {
                flags.infinite = true;
                cap
            } else {
                v
            };
            s += ws[i] * v;
        }
        total += wtn * s;
    }
    Flagged {
        value: 0.5 * total,
        flags,
    }
}

/// 1/2 sup over the basis span of 2<<pi, grad H>> - <<H, H>>_{chi0(pi)}.
pub fn energy_q_variational(path: &SpaceTimePath, basis: &TestBasis) -> Flagged {
    let grid = path.grid();
    let nodes = grid.nodes();
    let ws = grid.trapezoid_weights();
    let wt = time_weights(path.n_times(), path.dt());
    let (s, ds) = basis.space_table(&nodes);
    let tau = basis.time_table(path.times());
    let m = nodes.len();

    let mut b = vec![0.0; basis.dim()];
    for n in 0..path.n_times() {
        let pi = path.slice(n);
        for k in 0..basis.k {
            let lin: f64 = (0..m).map(|i| ws[i] * pi[i] * ds[k][i]).sum();
            for l in 0..basis.l {
                b[k * basis.l + l] += wt[n] * tau[l][n] * lin;
            }
        }
    }
    let weight: Vec<f64> = path.data().iter().map(|&p| chi0(p)).collect();
    let g = separable_gram(&s, &ws, &weight, &tau, &wt);
    let (v, ridge) = maximize_quadratic(g, &b);
    Flagged {
        value: 0.5 * v,
        flags: Flags {
            ridge,
            ..Flags::default()
        },
    }
}
