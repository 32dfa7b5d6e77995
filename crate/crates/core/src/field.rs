//! Density profiles and space-time paths sampled on a uniform grid.

use crate::error::{Error, Result};
use crate::grid::{time_weights, SpaceGrid};

const RANGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    grid: SpaceGrid,
    values: Vec<f64>,
}

impl DensityField {
    pub fn new(grid: SpaceGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(&v) = values
            .iter()
            .find(|v| !(**v >= -RANGE_TOL && **v <= 1.0 + RANGE_TOL))
        {
            return Err(Error::DensityOutOfRange(v));
        }
        Ok(DensityField { grid, values })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: SpaceGrid, f: F) -> Self {
        let values = grid.nodes().into_iter().map(f).collect();
        DensityField { grid, values }
    }

    pub fn constant(grid: SpaceGrid, c: f64) -> Self {
        DensityField {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn grid(&self) -> SpaceGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, u: f64) -> f64 {
        self.grid.interpolate(&self.values, u)
    }

    pub fn integral(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    pub fn sup_distance(&self, other: &DensityField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn l1_distance(&self, other: &DensityField) -> f64 {
        let d: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .collect();
        self.grid.integrate(&d)
    }
}

/// A path t -> pi_t on uniformly spaced times, row-major (time, node).
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimePath {
    times: Vec<f64>,
    grid: SpaceGrid,
    data: Vec<f64>,
}

impl SpaceTimePath {
    pub fn new(times: Vec<f64>, grid: SpaceGrid, data: Vec<f64>) -> Result<Self> {
        if data.len() != times.len() * grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} times x {} nodes",
                data.len(),
                times.len(),
                grid.len()
            )));
        }
        if let Some(row) = non_uniform_row(&times) {
            return Err(Error::Parse {
                row,
                msg: "time column is not uniformly spaced".into(),
            });
        }
        if let Some(&v) = data
            .iter()
            .find(|v| !(**v >= -RANGE_TOL && **v <= 1.0 + RANGE_TOL))
        {
            return Err(Error::DensityOutOfRange(v));
        }
        Ok(SpaceTimePath { times, grid, data })
    }

    /// Path with no time slices; the grid is a placeholder.
    pub fn empty() -> Self {
        SpaceTimePath {
            times: vec![],
            grid: SpaceGrid::new(2),
            data: vec![],
        }
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64>(times: Vec<f64>, grid: SpaceGrid, f: F) -> Self {
        let nodes = grid.nodes();
        let mut data = Vec::with_capacity(times.len() * nodes.len());
        for &t in &times {
            data.extend(nodes.iter().map(|&u| f(t, u)));
        }
        SpaceTimePath { times, grid, data }
    }

    pub fn from_fields(times: Vec<f64>, fields: &[DensityField]) -> Result<Self> {
        let grid = fields
            .first()
            .map(|f| f.grid())
            .ok_or_else(|| Error::GridMismatch("no fields".into()))?;
        let mut data = Vec::with_capacity(fields.len() * grid.len());
        for f in fields {
            if f.grid() != grid {
                return Err(Error::GridMismatch("fields on different grids".into()));
            }
            data.extend_from_slice(f.values());
        }
        SpaceTimePath::new(times, grid, data)
    }

    pub fn constant(field: &DensityField, times: Vec<f64>) -> Self {
        let mut data = Vec::with_capacity(times.len() * field.grid().len());
        for _ in &times {
            data.extend_from_slice(field.values());
        }
        SpaceTimePath {
            times,
            grid: field.grid(),
            data,
        }
    }

    pub(crate) fn from_raw(times: Vec<f64>, grid: SpaceGrid, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), times.len() * grid.len());
        SpaceTimePath { times, grid, data }
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn grid(&self) -> SpaceGrid {
        self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn dt(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            (self.times[self.times.len() - 1] - self.times[0]) / (self.times.len() - 1) as f64
        }
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    pub fn slice(&self, n: usize) -> &[f64] {
        let m = self.grid.len();
        &self.data[n * m..(n + 1) * m]
    }

    pub fn field(&self, n: usize) -> DensityField {
        DensityField {
            grid: self.grid,
            values: self.slice(n).to_vec(),
        }
    }

    pub fn last(&self) -> DensityField {
        self.field(self.n_times() - 1)
    }

    /// Linear interpolation in time, held constant outside the time range.
    pub fn at_time(&self, t: f64) -> Vec<f64> {
        let n = self.n_times();
        if n == 1 || t <= self.times[0] {
            return self.slice(0).to_vec();
        }
        if t >= self.times[n - 1] {
            return self.slice(n - 1).to_vec();
        }
        let s = (t - self.times[0]) / self.dt();
        let k = (s.floor() as usize).min(n - 2);
        let w = s - k as f64;
        let (a, b) = (self.slice(k), self.slice(k + 1));
        if w == 0.0 {
            return a.to_vec();
        }
        a.iter().zip(b).map(|(a, b)| a * (1.0 - w) + b * w).collect()
    }

    /// Same profiles traversed backwards in time.
    pub fn time_reversed(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for n in (0..self.n_times()).rev() {
            data.extend_from_slice(self.slice(n));
        }
        SpaceTimePath {
            times: self.times.clone(),
            grid: self.grid,
            data,
        }
    }

    /// Space-time L1 distance by the trapezoid rule in both variables.
    pub fn l1_distance(&self, other: &SpaceTimePath) -> Result<f64> {
        self.check_compatible(other)?;
        let wt = time_weights(self.n_times(), self.dt());
        let ws = self.grid.trapezoid_weights();
        let m = self.grid.len();
        let mut s = 0.0;
        for (n, wt) in wt.iter().enumerate() {
            for i in 0..m {
                s += wt * ws[i] * (self.data[n * m + i] - other.data[n * m + i]).abs();
            }
        }
        Ok(s)
    }

    pub fn max_abs_diff(&self, other: &SpaceTimePath) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn check_compatible(&self, other: &SpaceTimePath) -> Result<()> {
        if self.grid != other.grid || self.n_times() != other.n_times() {
            return Err(Error::GridMismatch("paths on different grids".into()));
        }
        let dt_gap = (self.dt() - other.dt()).abs();
        if dt_gap > 1e-12 * self.dt().max(1.0) {
            return Err(Error::GridMismatch("paths with different time steps".into()));
        }
        Ok(())
    }

    /// Pointwise map over values, keeping the grids.
    pub fn map_values<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        SpaceTimePath {
            times: self.times.clone(),
            grid: self.grid,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// Uniform time nodes 0, T/steps, ..., T.
pub fn uniform_times(t_end: f64, steps: usize) -> Vec<f64> {
    (0..=steps)
        .map(|k| {
            if k == steps {
                t_end
            } else {
                t_end * k as f64 / steps as f64
            }
        })
        .collect()
}

fn non_uniform_row(times: &[f64]) -> Option<usize> {
    if times.len() < 2 {
        return None;
    }
    let dt = times[1] - times[0];
    if dt <= 0.0 {
        return Some(1);
    }
    (2..times.len()).find(|&k| ((times[k] - times[k - 1]) - dt).abs() > 1e-7 * dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_values() {
        let g = SpaceGrid::new(4);
        assert!(DensityField::new(g, vec![0.0, 0.5, 1.2, 0.5, 0.5]).is_err());
        assert!(DensityField::new(g, vec![0.0; 4]).is_err());
    }

    #[test]
    fn rejects_non_uniform_times() {
        let g = SpaceGrid::new(2);
        let err = SpaceTimePath::new(vec![0.0, 0.1, 0.25], g, vec![0.5; 9]).unwrap_err();
        match err {
            Error::Parse { row, .. } => assert_eq!(row, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn time_interpolation() {
        let g = SpaceGrid::new(2);
        let p = SpaceTimePath::from_fn(uniform_times(1.0, 4), g, |t, _| t * 0.5);
        assert!((p.at_time(0.3)[1] - 0.15).abs() < 1e-15);
        assert_eq!(p.at_time(2.0)[0], 0.5);
        let r = p.time_reversed();
        assert_eq!(r.slice(0), p.slice(4));
    }

    #[test]
    fn l1_of_constant_shift() {
        let g = SpaceGrid::new(8);
        let a = SpaceTimePath::from_fn(uniform_times(2.0, 10), g, |_, _| 0.3);
        let b = a.map_values(|v| v + 0.1);
        assert!((a.l1_distance(&b).unwrap() - 0.4).abs() < 1e-14);
    }
}
