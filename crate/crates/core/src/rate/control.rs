use crate::error::{Error, Result};
use crate::field::SpaceTimePath;
use crate::grid::{cumulative_trapezoid, gradient, SpaceGrid};
use crate::model::{ModelParams, TransportCoeffs};

use super::{time_derivative, DELTA_FLOOR};

/// Space-time field H vanishing at u = +-1, with its spatial gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlField {
    times: Vec<f64>,
    grid: SpaceGrid,
    values: Vec<f64>,
    grad: Vec<f64>,
}

impl ControlField {
    /// Builds from node values; the gradient is taken by finite differences
    /// when not supplied.
    pub fn new(
        times: Vec<f64>,
        grid: SpaceGrid,
        values: Vec<f64>,
        grad: Option<Vec<f64>>,
    ) -> Result<Self> {
        let m = grid.len();
        if values.len() != times.len() * m {
            return Err(Error::GridMismatch("control values do not match the grid".into()));
        }
        let grad = match grad {
            Some(g) if g.len() == values.len() => g,
            Some(_) => return Err(Error::GridMismatch("control gradient size".into())),
            None => values
                .chunks(m)
                .flat_map(|row| gradient(row, grid.h()))
                .collect(),
        };
        let f = ControlField {
            times,
            grid,
            values,
            grad,
        };
        f.check_boundary()?;
        Ok(f)
    }

    /// Samples H and its gradient from closures.
    pub fn from_fn<F, G>(times: Vec<f64>, grid: SpaceGrid, h: F, grad_h: G) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64,
        G: Fn(f64, f64) -> f64,
    {
        let nodes = grid.nodes();
        let mut values = Vec::with_capacity(times.len() * nodes.len());
        let mut grad = Vec::with_capacity(times.len() * nodes.len());
        for &t in &times {
            for &u in &nodes {
                values.push(h(t, u));
                grad.push(grad_h(t, u));
            }
        }
        ControlField::new(times, grid, values, Some(grad))
    }

    pub fn zeros(times: Vec<f64>, grid: SpaceGrid) -> Self {
        let n = times.len() * grid.len();
        ControlField {
            times,
            grid,
            values: vec![0.0; n],
            grad: vec![0.0; n],
        }
    }

    fn check_boundary(&self) -> Result<()> {
        let m = self.grid.len();
        let scale = self.values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        for row in self.values.chunks(m) {
            let b = row[0].abs().max(row[m - 1].abs());
            if b > 1e-10 * scale {
                return Err(Error::BoundaryNonzero(b));
            }
        }
        Ok(())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn grid(&self) -> SpaceGrid {
        self.grid
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn dt(&self) -> f64 {
        let n = self.times.len();
        if n < 2 {
            0.0
        } else {
            (self.times[n - 1] - self.times[0]) / (n - 1) as f64
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    pub fn slice(&self, n: usize) -> &[f64] {
        let m = self.grid.len();
        &self.values[n * m..(n + 1) * m]
    }

    pub fn grad_slice(&self, n: usize) -> &[f64] {
        let m = self.grid.len();
        &self.grad[n * m..(n + 1) * m]
    }

    pub fn max_abs_grad(&self) -> f64 {
        self.grad.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0) && self.grad.iter().all(|&v| v == 0.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        ControlField {
            times: self.times.clone(),
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
            grad: self.grad.iter().map(|v| c * v).collect(),
        }
    }

    /// Gradient at (t, u) by linear interpolation in both variables.
    pub fn grad_at(&self, t: f64, u: f64) -> f64 {
        let nt = self.n_times();
        if nt == 1 {
            return self.grid.interpolate(self.grad_slice(0), u);
        }
        let s = ((t - self.times[0]) / self.dt()).clamp(0.0, (nt - 1) as f64);
        let k = (s.floor() as usize).min(nt - 2);
        let w = s - k as f64;
        let a = self.grid.interpolate(self.grad_slice(k), u);
        let b = self.grid.interpolate(self.grad_slice(k + 1), u);
        a * (1.0 - w) + b * w
    }
}

/// Output of the per-slice elliptic solve for H.
#[derive(Debug, Clone)]
pub struct ControlSolution {
    pub field: ControlField,
    /// The constant c_t fixed by H(t, +1) = 0.
    pub flux_constant: Vec<f64>,
    /// max_t |c_t - (mean-zero value)|; both routes must agree.
    pub mean_zero_gap: f64,
    /// Strong residual of the controlled equation with the same difference operators.
    pub residual: f64,
    /// D(pi) grad pi - chi(pi)[E/2 + grad H], i.e. W + c_t.
    pub flux: Vec<f64>,
}

pub fn solve_control_h(
    path: &SpaceTimePath,
    params: &ModelParams,
    coeffs: &TransportCoeffs,
) -> Result<ControlField> {
    Ok(solve_control_h_full(path, params, coeffs)?.field)
}

pub(crate) fn check_interior(path: &SpaceTimePath, coeffs: &TransportCoeffs) -> Result<Vec<f64>> {
    let m = path.grid().len();
    let nodes = path.grid().nodes();
    let mut chi = Vec::with_capacity(path.data().len());
    for (idx, &p) in path.data().iter().enumerate() {
        let c = coeffs.chi(p);
        if !(c >= DELTA_FLOOR) {
            return Err(Error::PathNotInterior {
                t: path.times()[idx / m],
                u: nodes[idx % m],
                chi: c,
            });
        }
        chi.push(c);
    }
    Ok(chi)
}

/// Integrates the controlled equation once in space on every time slice:
/// grad H = [D grad pi - (E/2) chi - W - c_t] / chi with W = int_{-1}^u d_t pi.
pub fn solve_control_h_full(
    path: &SpaceTimePath,
    params: &ModelParams,
    coeffs: &TransportCoeffs,
) -> Result<ControlSolution> {
    let grid = path.grid();
    let m = grid.len();
    let h = grid.h();
    let ws = grid.trapezoid_weights();
    let chi_all = check_interior(path, coeffs)?;
    let dtp = time_derivative(path);
    let nt = path.n_times();

    let mut values = Vec::with_capacity(nt * m);
    let mut grad = Vec::with_capacity(nt * m);
    let mut flux = Vec::with_capacity(nt * m);
    let mut cs = Vec::with_capacity(nt);
    let mut gap: f64 = 0.0;
    let mut residual: f64 = 0.0;
    for n in 0..nt {
        let pi = path.slice(n);
        let chi = &chi_all[n * m..(n + 1) * m];
        let dt_row = &dtp[n * m..(n + 1) * m];
        let g = gradient(pi, h);
        let w = cumulative_trapezoid(dt_row, h);
        let b: Vec<f64> = (0..m)
            .map(|i| coeffs.d(pi[i]) * g[i] - 0.5 * params.e * chi[i] - w[i])
            .collect();
        let inv: Vec<f64> = chi.iter().map(|c| 1.0 / c).collect();
        let r: Vec<f64> = b.iter().zip(&inv).map(|(b, i)| b * i).collect();
        let h0 = cumulative_trapezoid(&r, h);
        let ic = cumulative_trapezoid(&inv, h);
        // shooting: H(+1) = h0(+1) - c * int 1/chi = 0
        let c = h0[m - 1] / ic[m - 1];
        let gh: Vec<f64> = (0..m).map(|i| (b[i] - c) * inv[i]).collect();
        let mut hv: Vec<f64> = (0..m).map(|i| h0[i] - c * ic[i]).collect();
        hv[0] = 0.0;
        hv[m - 1] = 0.0;

        // mean-zero value of the same constant from the momentum route
        let inv_mean: f64 = (0..m).map(|i| ws[i] * inv[i]).sum();
        let mom_mean: f64 = (0..m).map(|i| ws[i] * w[i] * inv[i]).sum::<f64>() / inv_mean;
        let q_mean: f64 = (0..m)
            .map(|i| {
                let p = w[i] - mom_mean;
                ws[i] * (p - coeffs.d(pi[i]) * g[i] + 0.5 * params.e * chi[i]) * inv[i]
            })
            .sum::<f64>()
            / inv_mean;
        gap = gap.max((c + q_mean + mom_mean).abs());

        let fl: Vec<f64> = (0..m)
            .map(|i| coeffs.d(pi[i]) * g[i] - chi[i] * (0.5 * params.e + gh[i]))
            .collect();
        let dfl = gradient(&fl, h);
        for i in 0..m {
            residual = residual.max((dfl[i] - dt_row[i]).abs());
        }
        values.extend_from_slice(&hv);
        grad.extend_from_slice(&gh);
        flux.extend_from_slice(&fl);
        cs.push(c);
    }
    Ok(ControlSolution {
        field: ControlField {
            times: path.times().to_vec(),
            grid,
            values,
            grad,
        },
        flux_constant: cs,
        mean_zero_gap: gap,
        residual,
        flux,
    })
}

/// Momentum P with d_t pi = grad P, kept in the gauge <P chi^{-1}> = 0.
#[derive(Debug, Clone)]
pub struct MomentumField {
    times: Vec<f64>,
    grid: SpaceGrid,
    values: Vec<f64>,
    /// The per-time weighted mean removed by the last normalization.
    mean: Vec<f64>,
}

impl MomentumField {
    pub fn new(times: Vec<f64>, grid: SpaceGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != times.len() * grid.len() {
            return Err(Error::GridMismatch("momentum values do not match the grid".into()));
        }
        let n = times.len();
        Ok(MomentumField {
            times,
            grid,
            values,
            mean: vec![0.0; n],
        })
    }

    /// P = D grad pi - chi [E/2 + grad H] from a control solve.
    pub fn from_control(solution: &ControlSolution) -> Self {
        let f = &solution.field;
        MomentumField {
            times: f.times.clone(),
            grid: f.grid,
            values: solution.flux.clone(),
            mean: vec![0.0; f.times.len()],
        }
    }

    /// P = int_{-1}^u d_t pi, directly from the path.
    pub fn from_path(path: &SpaceTimePath) -> Self {
        let m = path.grid().len();
        let h = path.grid().h();
        let dtp = time_derivative(path);
        let values = dtp.chunks(m).flat_map(|r| cumulative_trapezoid(r, h)).collect();
        MomentumField {
            times: path.times().to_vec(),
            grid: path.grid(),
            values,
            mean: vec![0.0; path.n_times()],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn grid(&self) -> SpaceGrid {
        self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn slice(&self, n: usize) -> &[f64] {
        let m = self.grid.len();
        &self.values[n * m..(n + 1) * m]
    }

    /// Adds a spatial constant per time slice.
    pub fn shifted(&self, shift: &[f64]) -> Self {
        let m = self.grid.len();
        let mut out = self.clone();
        for (n, s) in shift.iter().enumerate() {
            for v in &mut out.values[n * m..(n + 1) * m] {
                *v += s;
            }
        }
        out
    }

    /// Removes m(t) = <P chi^{-1}> / <chi^{-1}> from every slice; slices where
    /// <chi^{-1}> is capped are left unchanged.
    pub fn normalize(&mut self, path: &SpaceTimePath, coeffs: &TransportCoeffs) {
        let m = self.grid.len();
        let ws = self.grid.trapezoid_weights();
        for n in 0..self.times.len() {
            let pi = path.slice(n);
            let mut inv = 0.0;
            let mut pm = 0.0;
            let mut capped = false;
            for i in 0..m {
                let c = coeffs.chi(pi[i]);
                if c < DELTA_FLOOR {
                    capped = true;
                }
                let r = 1.0 / c.max(DELTA_FLOOR);
                inv += ws[i] * r;
                pm += ws[i] * self.values[n * m + i] * r;
            }
            if capped {
                self.mean[n] = 0.0;
                continue;
            }
            let mean = pm / inv;
            for v in &mut self.values[n * m..(n + 1) * m] {
                *v -= mean;
            }
            self.mean[n] = mean;
        }
    }
}
