use std::f64::consts::PI;

use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeModes {
    /// cos(l pi t / T), l = 0..L-1
    Cosine,
    /// Piecewise-linear hats on L equally spaced nodes of [0, T].
    Hat,
}

/// Products of sine modes in space (vanishing at u = +-1) and time modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestBasis {
    pub k: usize,
    pub l: usize,
    pub time_modes: TimeModes,
}

impl TestBasis {
    pub fn new(k: usize, l: usize) -> Self {
        TestBasis {
            k,
            l,
            time_modes: TimeModes::Cosine,
        }
    }

    pub fn with_time_modes(mut self, modes: TimeModes) -> Self {
        self.time_modes = modes;
        self
    }

    pub fn dim(&self) -> usize {
        self.k * self.l
    }

    /// Mode `k` (0-based) is sin((k+1) pi (1+u)/2); returns value and derivative.
    pub fn space(&self, k: usize, u: f64) -> (f64, f64) {
        let w = (k + 1) as f64 * PI / 2.0;
        let x = w * (1.0 + u);
        (x.sin(), w * x.cos())
    }

    pub fn time(&self, l: usize, t: f64, t_end: f64) -> (f64, f64) {
        match self.time_modes {
            TimeModes::Cosine => {
                let w = l as f64 * PI / t_end;
                ((w * t).cos(), -w * (w * t).sin())
            }
            TimeModes::Hat => {
                if self.l == 1 {
                    return (1.0, 0.0);
                }
                let dt = t_end / (self.l - 1) as f64;
                let c = l as f64 * dt;
                let r = (t - c) / dt;
                if r.abs() >= 1.0 {
                    (0.0, 0.0)
                } else if r <= 0.0 {
                    (1.0 + r, if l == 0 { 0.0 } else { 1.0 / dt })
                } else {
                    (1.0 - r, -1.0 / dt)
                }
            }
        }
    }

    /// Rows indexed by mode: (values, derivatives) at the grid nodes.
    pub(crate) fn space_table(&self, nodes: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut v = Vec::with_capacity(self.k);
        let mut d = Vec::with_capacity(self.k);
        for k in 0..self.k {
            let (a, b): (Vec<f64>, Vec<f64>) = nodes.iter().map(|&u| self.space(k, u)).unzip();
            v.push(a);
            d.push(b);
        }
        (v, d)
    }

    pub(crate) fn time_table(&self, times: &[f64]) -> Vec<Vec<f64>> {
        let t_end = *times.last().unwrap_or(&1.0);
        (0..self.l)
            .map(|l| times.iter().map(|&t| self.time(l, t, t_end).0).collect())
            .collect()
    }
}

/// Gram matrix sum_n wt_n tau_l tau_l' sum_i ws_i weight_{n,i} a_k a_k'.
pub(crate) fn separable_gram(
    space: &[Vec<f64>],
    ws: &[f64],
    weight: &[f64],
    time: &[Vec<f64>],
    wt: &[f64],
) -> DMatrix<f64> {
    let kk = space.len();
    let ll = time.len();
    let m = ws.len();
    let mut g = DMatrix::<f64>::zeros(kk * ll, kk * ll);
    let mut a = vec![0.0; kk * kk];
    let mut scratch = vec![0.0; m];
    for (n, &wtn) in wt.iter().enumerate() {
        if wtn == 0.0 {
            continue;
        }
        let row = &weight[n * m..(n + 1) * m];
        for k in 0..kk {
            for i in 0..m {
                scratch[i] = ws[i] * row[i] * space[k][i];
            }
            for k2 in k..kk {
                let s: f64 = scratch.iter().zip(&space[k2]).map(|(x, y)| x * y).sum();
                a[k * kk + k2] = s;
                a[k2 * kk + k] = s;
            }
        }
        for l in 0..ll {
            let tl = time[l][n];
            if tl == 0.0 {
                continue;
            }
            for l2 in 0..ll {
                let c = wtn * tl * time[l2][n];
                if c == 0.0 {
                    continue;
                }
                for k in 0..kk {
                    for k2 in 0..kk {
                        g[(k * ll + l, k2 * ll + l2)] += c * a[k * kk + k2];
                    }
                }
            }
        }
    }
    g
}

/// Maximizes 2 b.c - c.G.c over c; returns (b.G^{-1}.b, ridge used).
pub(crate) fn maximize_quadratic(g: DMatrix<f64>, b: &[f64]) -> (f64, bool) {
    let rhs = DVector::from_column_slice(b);
    if b.iter().all(|&x| x == 0.0) {
        return (0.0, false);
    }
    if let Some(ch) = g.clone().cholesky() {
        let x = ch.solve(&rhs);
        return (rhs.dot(&x), false);
    }
    let scale = (0..g.nrows()).map(|i| g[(i, i)].abs()).fold(0.0, f64::max).max(1.0);
    let ridge = 1e-12 * scale;
    warn!("singular Gram matrix; adding ridge {ridge:e}");
    let mut reg = g;
    for i in 0..reg.nrows() {
        reg[(i, i)] += ridge;
    }
    let x = match reg.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => reg.lu().solve(&rhs).unwrap_or_else(|| DVector::zeros(b.len())),
    };
    (rhs.dot(&x), true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_vanish_at_boundary() {
        let b = TestBasis::new(6, 3);
        for k in 0..6 {
            assert!(b.space(k, -1.0).0.abs() < 1e-15);
            assert!(b.space(k, 1.0).0.abs() < 1e-14);
        }
    }

    #[test]
    fn hats_partition_unity() {
        let b = TestBasis::new(1, 5).with_time_modes(TimeModes::Hat);
        for &t in &[0.0, 0.1, 0.37, 0.5, 0.99, 1.0] {
            let s: f64 = (0..5).map(|l| b.time(l, t, 1.0).0).sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn quadratic_maximum() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]);
        let (v, ridge) = maximize_quadratic(g, &[2.0, 4.0]);
        assert!(!ridge);
        assert!((v - (4.0 / 2.0 + 16.0 / 4.0)).abs() < 1e-14);
        let (z, ridge) = maximize_quadratic(DMatrix::zeros(2, 2), &[1.0, 0.0]);
        assert!(ridge && z.is_finite());
    }
}
