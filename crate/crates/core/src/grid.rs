//! Uniform node grid on [-1, 1] and the discrete operators used on it.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceGrid {
    m: usize,
}

impl SpaceGrid {
    /// `m` cells, `m + 1` nodes.
    pub fn new(m: usize) -> Self {
        assert!(m >= 2, "grid needs at least two cells");
        SpaceGrid { m }
    }

    pub fn cells(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.m + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        2.0 / self.m as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.m {
            1.0
        } else {
            -1.0 + i as f64 * self.h()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.h();
        let mut w = vec![h; self.len()];
        w[0] = h / 2.0;
        w[self.m] = h / 2.0;
        w
    }

    /// Trapezoid rule for node values.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.len());
        let h = self.h();
        let inner: f64 = f[1..self.m].iter().sum();
        h * (inner + 0.5 * (f[0] + f[self.m]))
    }

    /// Linear interpolation of node values at `u`.
    pub fn interpolate(&self, f: &[f64], u: f64) -> f64 {
        let s = ((u + 1.0) / self.h()).clamp(0.0, self.m as f64);
        let i = (s.floor() as usize).min(self.m - 1);
        let w = s - i as f64;
        f[i] * (1.0 - w) + f[i + 1] * w
    }
}

/// Second-order first derivative: central inside, one-sided at the ends.
pub fn gradient(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut g = vec![0.0; n];
    if n < 3 {
        if n == 2 {
            g[0] = (f[1] - f[0]) / h;
            g[1] = g[0];
        }
        return g;
    }
    for i in 1..n - 1 {
        g[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    }
    g[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    g[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    g
}

/// Fourth-order first derivative, used for accuracy checks.
pub fn gradient4(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 5);
    let mut g = vec![0.0; n];
    for i in 2..n - 2 {
        g[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h);
    }
    let fwd = |i: usize| {
        (-25.0 * f[i] + 48.0 * f[i + 1] - 36.0 * f[i + 2] + 16.0 * f[i + 3] - 3.0 * f[i + 4])
            / (12.0 * h)
    };
    let bwd = |i: usize| {
        (25.0 * f[i] - 48.0 * f[i - 1] + 36.0 * f[i - 2] - 16.0 * f[i - 3] + 3.0 * f[i - 4])
            / (12.0 * h)
    };
    g[0] = fwd(0);
    g[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h);
    g[n - 1] = bwd(n - 1);
    g[n - 2] = (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5])
        / (12.0 * h);
    g
}

/// Cumulative trapezoid integral from the first node.
pub fn cumulative_trapezoid(f: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(f.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..f.len() {
        acc += 0.5 * h * (f[i - 1] + f[i]);
        out.push(acc);
    }
    out
}

/// Trapezoid weights for `n` equally spaced time nodes with spacing `dt`.
pub fn time_weights(n: usize, dt: f64) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.0],
        _ => {
            let mut w = vec![dt; n];
            w[0] = dt / 2.0;
            w[n - 1] = dt / 2.0;
            w
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_hit_endpoints() {
        let g = SpaceGrid::new(7);
        assert_eq!(g.node(0), -1.0);
        assert_eq!(g.node(7), 1.0);
        assert!((g.trapezoid_weights().iter().sum::<f64>() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn gradient_exact_on_quadratics() {
        let g = SpaceGrid::new(10);
        let f: Vec<f64> = g.nodes().iter().map(|u| u * u + 3.0 * u).collect();
        let d = gradient(&f, g.h());
        for (u, d) in g.nodes().iter().zip(&d) {
            assert!((d - (2.0 * u + 3.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient4_exact_on_quartics() {
        let g = SpaceGrid::new(12);
        let f: Vec<f64> = g.nodes().iter().map(|u| u.powi(4) - u).collect();
        let d = gradient4(&f, g.h());
        for (u, d) in g.nodes().iter().zip(&d) {
            assert!((d - (4.0 * u.powi(3) - 1.0)).abs() < 1e-11);
        }
    }

    #[test]
    fn interpolation_and_cumulative() {
        let g = SpaceGrid::new(4);
        let f = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        assert!((g.interpolate(&f, -0.75) - 0.5).abs() < 1e-15);
        assert_eq!(g.interpolate(&f, 1.0), 4.0);
        let c = cumulative_trapezoid(&f, g.h());
        assert!((c[4] - g.integrate(&f)).abs() < 1e-15);
    }
}
