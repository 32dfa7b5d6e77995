//! Hydrodynamic equation d_t rho = div(D grad rho) - (E/2) div chi(rho) with
//! Dirichlet reservoirs, and its stationary profile.

use log::debug;
use serde::Serialize;

use crate::error::{Error, Result};
pub use crate::field::{uniform_times, DensityField, SpaceTimePath};
use crate::grid::SpaceGrid;
use crate::model::{ModelParams, TransportCoeffs};
use crate::quad::solve_tridiagonal;

#[derive(Debug, Clone)]
pub struct HydroOptions {
    /// Output time step.
    pub dt: f64,
    /// Internal substeps per output step; chosen from a diffusive bound when `None`.
    pub substeps: Option<usize>,
    pub picard_max: usize,
    pub picard_tol: f64,
    /// Values may leave [0, 1] by at most this much before the run is declared unstable.
    pub escape_delta: f64,
}

impl HydroOptions {
    pub fn new(dt: f64) -> Self {
        HydroOptions {
            dt,
            substeps: None,
            picard_max: 50,
            picard_tol: 1e-10,
            escape_delta: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HydroDiagnostics {
    pub steps: usize,
    pub substeps: usize,
    /// Largest residual of the discrete equation over all substeps.
    pub max_residual: f64,
    pub max_picard_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct HydroSolution {
    pub path: SpaceTimePath,
    pub diagnostics: HydroDiagnostics,
}

pub fn solve_hydro(
    gamma: &DensityField,
    params: &ModelParams,
    coeffs: &TransportCoeffs,
    dt: f64,
) -> Result<SpaceTimePath> {
    Ok(solve_hydro_with(gamma, params, coeffs, &HydroOptions::new(dt))?.path)
}

pub fn solve_hydro_with(
    gamma: &DensityField,
    params: &ModelParams,
    coeffs: &TransportCoeffs,
    opts: &HydroOptions,
) -> Result<HydroSolution> {
    params.validate()?;
    if !(opts.dt > 0.0) || opts.dt > params.t * (1.0 + 1e-12) {
        return Err(Error::InvalidParams(format!("time step {} outside (0, T]", opts.dt)));
    }
    let grid = gamma.grid();
    let steps = (params.t / opts.dt).round().max(1.0) as usize;
    let dt_out = params.t / steps as f64;
    let h = grid.h();
    let substeps = opts
        .substeps
        .unwrap_or_else(|| ((dt_out * coeffs.max_d() / (h * h)).ceil() as usize).max(1));
    let dts = dt_out / substeps as f64;

    let m = grid.cells();
    let mut rho = gamma.values().to_vec();
    let incompatible = (rho[0] - params.rho_minus).abs() > 1e-12
        || (rho[m] - params.rho_plus).abs() > 1e-12;
    rho[0] = params.rho_minus;
    rho[m] = params.rho_plus;

    let times = uniform_times(params.t, steps);
    let mut data = Vec::with_capacity(times.len() * grid.len());
    data.extend_from_slice(gamma.values());

    let stepper = Stepper::new(grid, params, coeffs, opts);
    let mut diag = HydroDiagnostics {
        steps,
        substeps,
        max_residual: 0.0,
        max_picard_iterations: 0,
    };
    // Two backward Euler substeps damp the corner layer of data that
    // disagrees with the reservoirs.
    let mut implicit_left = if incompatible { 2 } else { 0 };
    for k in 1..=steps {
        for _ in 0..substeps {
            let theta = if implicit_left > 0 {
                implicit_left -= 1;
                1.0
            } else {
                0.5
            };
            let (next, iters, resid) = stepper.step(&rho, dts, theta)?;
            diag.max_residual = diag.max_residual.max(resid);
            diag.max_picard_iterations = diag.max_picard_iterations.max(iters);
            rho = next;
        }
        let t = times[k];
        if let Some(&v) = rho
            .iter()
            .find(|v| **v < -opts.escape_delta || **v > 1.0 + opts.escape_delta)
        {
            return Err(Error::Instability { t, value: v });
        }
        data.extend_from_slice(&rho);
    }
    debug!(
        "hydro: {} steps x {} substeps, residual {:e}",
        steps, substeps, diag.max_residual
    );
    Ok(HydroSolution {
        path: SpaceTimePath::from_raw(times, grid, data),
        diagnostics: diag,
    })
}

/// Face flux D(rho) grad rho - (E/2) chi(rho) with midpoint face values.
pub fn face_fluxes(rho: &[f64], h: f64, e: f64, coeffs: &TransportCoeffs) -> Vec<f64> {
    rho.windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            coeffs.d(mid) * (w[1] - w[0]) / h - 0.5 * e * coeffs.chi(mid)
        })
        .collect()
}

struct Stepper<'a> {
    h: f64,
    m: usize,
    e: f64,
    coeffs: &'a TransportCoeffs,
    picard_max: usize,
    picard_tol: f64,
}

impl<'a> Stepper<'a> {
    fn new(
        grid: SpaceGrid,
        params: &ModelParams,
        coeffs: &'a TransportCoeffs,
        opts: &HydroOptions,
    ) -> Self {
        Stepper {
            h: grid.h(),
            m: grid.cells(),
            e: params.e,
            coeffs,
            picard_max: opts.picard_max,
            picard_tol: opts.picard_tol,
        }
    }

    fn divergence(&self, rho: &[f64]) -> Vec<f64> {
        let f = face_fluxes(rho, self.h, self.e, self.coeffs);
        let mut l = vec![0.0; self.m + 1];
        for i in 1..self.m {
            l[i] = (f[i] - f[i - 1]) / self.h;
        }
        l
    }

    /// One theta-step; returns (new state, Picard iterations, residual).
    fn step(&self, old: &[f64], dt: f64, theta: f64) -> Result<(Vec<f64>, usize, f64)> {
        let m = self.m;
        let h = self.h;
        let explicit = self.divergence(old);
        let mut cur = old.to_vec();
        let n = m - 1;
        let (mut lower, mut diag, mut upper, mut rhs) =
            (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let mut change = f64::INFINITY;
        let mut iters = 0;
        while iters < self.picard_max {
            iters += 1;
            let mut a = Vec::with_capacity(m);
            let mut c = Vec::with_capacity(m);
            for w in cur.windows(2) {
                let mid = 0.5 * (w[0] + w[1]);
                a.push(self.coeffs.d(mid));
                c.push(self.coeffs.chi(mid));
            }
            let k = theta * dt / (h * h);
            for j in 0..n {
                let i = j + 1;
                diag[j] = 1.0 + k * (a[i] + a[i - 1]);
                lower[j] = -k * a[i - 1];
                upper[j] = -k * a[i];
                rhs[j] = old[i] + (1.0 - theta) * dt * explicit[i]
                    - theta * dt * 0.5 * self.e * (c[i] - c[i - 1]) / h;
            }
            rhs[0] += k * a[0] * old[0];
            rhs[n - 1] += k * a[m - 1] * old[m];
            solve_tridiagonal(&lower, &diag, &upper, &mut rhs);
            change = 0.0;
            for j in 0..n {
                change = f64::max(change, (rhs[j] - cur[j + 1]).abs());
                cur[j + 1] = rhs[j];
            }
            if change < self.picard_tol {
                break;
            }
        }
        if change >= self.picard_tol {
            return Err(Error::NonConvergence {
                what: "Picard iteration",
                iterations: iters,
                residual: change,
            });
        }
        let implicit = self.divergence(&cur);
        let mut resid: f64 = 0.0;
        for i in 1..m {
            let r = (cur[i] - old[i]) / dt - theta * implicit[i] - (1.0 - theta) * explicit[i];
            resid = resid.max(r.abs() * dt);
        }
        Ok((cur, iters, resid))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StationarySolution {
    #[serde(skip)]
    pub profile: DensityField,
    /// The first integral D(rho) rho' - (E/2) chi(rho).
    pub flux: f64,
    /// |rho(1) - rho_+| at the accepted flux.
    pub endpoint_error: f64,
    pub iterations: usize,
}

pub fn solve_stationary(
    params: &ModelParams,
    coeffs: &TransportCoeffs,
    grid: SpaceGrid,
) -> Result<DensityField> {
    Ok(solve_stationary_full(params, coeffs, grid)?.profile)
}

enum Shot {
    Hit { end: f64, slope: f64 },
    Above,
    Below,
}

struct Shooter<'a> {
    params: &'a ModelParams,
    coeffs: &'a TransportCoeffs,
    grid: SpaceGrid,
    sub: usize,
}

impl Shooter<'_> {
    fn rhs(&self, rho: f64, s: f64, j: f64) -> (f64, f64) {
        let c = self.coeffs;
        let d = c.d(rho);
        let num = j + 0.5 * self.params.e * c.chi(rho);
        let f = num / d;
        let df_drho = (0.5 * self.params.e * c.chi_prime(rho) * d - num * c.d_prime(rho)) / (d * d);
        (f, df_drho * s + 1.0 / d)
    }

    /// RK4 on (rho, d rho / dJ); optionally records node values.
    fn shoot(&self, j: f64, mut record: Option<&mut Vec<f64>>) -> Shot {
        let h = self.grid.h() / self.sub as f64;
        let mut rho = self.params.rho_minus;
        let mut s = 0.0;
        if let Some(r) = record.as_deref_mut() {
            r.push(rho);
        }
        for _ in 0..self.grid.cells() {
            for _ in 0..self.sub {
                let (k1, l1) = self.rhs(rho, s, j);
                let (k2, l2) = self.rhs(rho + 0.5 * h * k1, s + 0.5 * h * l1, j);
                let (k3, l3) = self.rhs(rho + 0.5 * h * k2, s + 0.5 * h * l2, j);
                let (k4, l4) = self.rhs(rho + h * k3, s + h * l3, j);
                rho += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                s += h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
                if !rho.is_finite() || rho > 4.0 {
                    return Shot::Above;
                }
                if rho < -3.0 {
                    return Shot::Below;
                }
            }
            if let Some(r) = record.as_deref_mut() {
                r.push(rho);
            }
        }
        Shot::Hit { end: rho, slope: s }
    }
}

/// Shooting on the flux J with a bracketed, damped Newton iteration.
pub fn solve_stationary_full(
    params: &ModelParams,
    coeffs: &TransportCoeffs,
    grid: SpaceGrid,
) -> Result<StationarySolution> {
    params.validate()?;
    let sub = (4096 / grid.cells()).max(8);
    let sh = Shooter {
        params,
        coeffs,
        grid,
        sub,
    };
    let target = params.rho_plus;
    let mid = 0.5 * (params.rho_minus + params.rho_plus);
    let mut j = coeffs.d(mid) * (params.rho_plus - params.rho_minus) / 2.0
        - 0.5 * params.e * coeffs.chi(mid);

    // residual sign: +1 if rho(1) overshoots
    let eval = |j: f64| -> (f64, Option<f64>, f64) {
        match sh.shoot(j, None) {
            Shot::Hit { end, slope } => (end - target, Some(slope), end),
            Shot::Above => (f64::INFINITY, None, f64::NAN),
            Shot::Below => (f64::NEG_INFINITY, None, f64::NAN),
        }
    };

    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut iterations = 0;
    let mut best = f64::INFINITY;
    let mut step_scale = 1.0 + j.abs();
    while iterations < 300 {
        iterations += 1;
        let (g, slope, _) = eval(j);
        if g.is_finite() {
            best = g.abs();
            if best < 1e-14 {
                break;
            }
        }
        if g > 0.0 {
            hi = j;
        } else {
            lo = j;
        }
        let newton = match slope {
            Some(s) if s > 0.0 && g.is_finite() => Some(j - g / s),
            _ => None,
        };
        let next = match newton {
            Some(n) if n > lo && n < hi => n,
            _ => {
                if lo.is_finite() && hi.is_finite() {
                    0.5 * (lo + hi)
                } else if lo.is_finite() {
                    step_scale *= 2.0;
                    lo + step_scale
                } else {
                    step_scale *= 2.0;
                    hi - step_scale
                }
            }
        };
        if lo.is_finite() && hi.is_finite() && (hi - lo) < 1e-15 * (1.0 + j.abs()) {
            break;
        }
        j = next;
    }
    if !(best < 1e-10) {
        return Err(Error::NonConvergence {
            what: "stationary shooting",
            iterations,
            residual: best,
        });
    }
    let mut values = Vec::with_capacity(grid.len());
    sh.shoot(j, Some(&mut values));
    let endpoint_error = (values[grid.cells()] - target).abs();
    values[grid.cells()] = target;
    Ok(StationarySolution {
        profile: DensityField::new(grid, values)?,
        flux: j,
        endpoint_error,
        iterations,
    })
}

/// Discrete energy 1/2 int int (grad rho)^2 / chi0(rho), used as a finiteness check.
pub fn hydro_energy(path: &SpaceTimePath) -> f64 {
    crate::rate::energy_q(path).value
}
