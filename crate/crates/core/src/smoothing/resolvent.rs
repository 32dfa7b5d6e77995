use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::DensityField;
use crate::grid::SpaceGrid;
use crate::quad::{phi1, psi};

/// Below this the kernel width sqrt(eps) is far under any practical grid spacing.
pub const MIN_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelKind {
    Dirichlet,
    Neumann,
}

/// (I - eps Laplacian)^{-1} on [-1, 1] with Dirichlet or Neumann conditions.
///
/// The Green's function is a combination of four exponentials,
/// R(u, v) = k / (2 (1 - e^{-4k})) sum_m sigma_m exp(k e_m(u, v)), k = eps^{-1/2},
/// with e = (-|u-v|, u+v-2, -u-v-2, |u-v|-4), all nonpositive, and
/// sigma = (+, -, -, +) for Dirichlet and (+, +, +, +) for Neumann.
/// The table holds product-integration weights W_ij = int R(u_i, v) phi_j(v) dv
/// against the hat functions phi_j of the grid, computed in closed form, so
/// applying the kernel is exact for piecewise-linear data.
#[derive(Debug, Clone)]
pub struct ResolventKernel {
    kind: KernelKind,
    epsilon: f64,
    grid: SpaceGrid,
    weights: Vec<f64>,
}

impl ResolventKernel {
    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// lambda = 1 / eps
    pub fn lambda(&self) -> f64 {
        1.0 / self.epsilon
    }

    pub fn grid(&self) -> SpaceGrid {
        self.grid
    }

    /// Row i of the weight matrix.
    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.grid.len();
        &self.weights[i * m..(i + 1) * m]
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).iter().sum()
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let m = self.grid.len();
        assert_eq!(f.len(), m, "field does not match the kernel grid");
        (0..m)
            .map(|i| self.row(i).iter().zip(f).map(|(w, v)| w * v).sum())
            .collect()
    }

    /// Pointwise kernel value R(u, v).
    pub fn value(&self, u: f64, v: f64) -> f64 {
        kernel_value(self.kind, self.epsilon, u, v)
    }
}

pub fn kernel_value(kind: KernelKind, epsilon: f64, u: f64, v: f64) -> f64 {
    let k = 1.0 / epsilon.sqrt();
    let pre = k / (-2.0 * (-4.0 * k).exp_m1());
    let d = (u - v).abs();
    let s = sign(kind);
    let e = [-d, u + v - 2.0, -u - v - 2.0, d - 4.0];
    pre * (0..4).map(|m| s[m] * (k * e[m]).exp()).sum::<f64>()
}

fn sign(kind: KernelKind) -> [f64; 4] {
    match kind {
        KernelKind::Dirichlet => [1.0, -1.0, -1.0, 1.0],
        KernelKind::Neumann => [1.0; 4],
    }
}

/// int over [0, h] of e^{c + d x} times (1 - x/h) and x/h, evaluated from the
/// larger endpoint so every exponential argument is nonpositive.
fn cell_weights(c0: f64, c1: f64, h: f64) -> (f64, f64) {
    let w = c1 - c0;
    if w <= 0.0 {
        let p = psi(w);
        (c0.exp() * h * (phi1(w) - p), c0.exp() * h * p)
    } else {
        let p = psi(-w);
        (c1.exp() * h * p, c1.exp() * h * (phi1(-w) - p))
    }
}

pub fn resolvent_kernel(kind: KernelKind, epsilon: f64, grid: SpaceGrid) -> Result<ResolventKernel> {
    if !(epsilon >= MIN_EPSILON) || !epsilon.is_finite() {
        return Err(Error::ResolventUnderResolved(epsilon));
    }
    Ok(build(kind, epsilon, grid))
}

fn build(kind: KernelKind, epsilon: f64, grid: SpaceGrid) -> ResolventKernel {
    let m = grid.len();
    let h = grid.h();
    let nodes = grid.nodes();
    let k = 1.0 / epsilon.sqrt();
    let pre = k / (-2.0 * (-4.0 * k).exp_m1());
    let s = sign(kind);
    let mut weights = vec![0.0; m * m];
    for i in 0..m {
        let u = nodes[i];
        let row = &mut weights[i * m..(i + 1) * m];
        for j in 0..m - 1 {
            let (v0, v1) = (nodes[j], nodes[j + 1]);
            // the cell lies entirely on one side of u, so |u - v| is linear on it
            let expo = |v: f64| {
                let d = (u - v).abs();
                [-d, u + v - 2.0, -u - v - 2.0, d - 4.0]
            };
            let (e0, e1) = (expo(v0), expo(v1));
            for mm in 0..4 {
                let (a, b) = cell_weights(k * e0[mm], k * e1[mm], h);
                row[j] += pre * s[mm] * a;
                row[j + 1] += pre * s[mm] * b;
            }
        }
    }
    ResolventKernel {
        kind,
        epsilon,
        grid,
        weights,
    }
}

/// Resolvent with parameter beta >= 0; beta = 0 is the identity.
pub(crate) fn kernel_or_identity(kind: KernelKind, beta: f64, grid: SpaceGrid) -> Option<ResolventKernel> {
    (beta > 0.0).then(|| build(kind, beta.max(MIN_EPSILON), grid))
}

pub fn apply_resolvent(field: &DensityField, kernel: &ResolventKernel) -> Result<DensityField> {
    if field.grid() != kernel.grid {
        return Err(Error::GridMismatch("field and kernel grids differ".into()));
    }
    let out = kernel.apply(field.values());
    // the Neumann kernel is a probability kernel; clip rounding only
    let out = out.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
    DensityField::new(field.grid(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;

    #[test]
    fn weights_match_quadrature() {
        let g = SpaceGrid::new(8);
        let kern = resolvent_kernel(KernelKind::Dirichlet, 0.05, g).unwrap();
        let nodes = g.nodes();
        for i in [0, 3, 8] {
            for j in [0, 2, 3, 4, 8] {
                let hat = |v: f64| (1.0 - (v - nodes[j]).abs() / g.h()).max(0.0);
                let lo = (nodes[j] - g.h()).max(-1.0);
                let hi = (nodes[j] + g.h()).min(1.0);
                // split at u_i so the integrand is smooth on each piece
                let u = nodes[i];
                let f = |v: f64| kern.value(u, v) * hat(v);
                let exact = if u > lo && u < hi {
                    integrate(f, lo, u, 16) + integrate(f, u, hi, 16)
                } else {
                    integrate(f, lo, hi, 16)
                };
                assert!((kern.row(i)[j] - exact).abs() < 1e-12, "{i} {j}");
            }
        }
    }

    #[test]
    fn dirichlet_kernel_vanishes_at_boundary() {
        for eps in [1e-4, 0.1, 3.0] {
            assert!(kernel_value(KernelKind::Dirichlet, eps, -1.0, 0.3).abs() < 1e-12);
            assert!(kernel_value(KernelKind::Dirichlet, eps, 0.2, 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tiny_epsilon_rejected() {
        assert!(resolvent_kernel(KernelKind::Neumann, 1e-9, SpaceGrid::new(8)).is_err());
        assert!(resolvent_kernel(KernelKind::Neumann, 1e-8, SpaceGrid::new(8)).is_ok());
    }
}
