use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::field::{DensityField, SpaceTimePath};
use crate::hydro::solve_hydro;
use crate::model::{linear_profile, ModelParams, TransportCoeffs};

use super::mollifier::MollifierSpec;
use super::resolvent::{kernel_or_identity, KernelKind, ResolventKernel};

/// Points per unit of the mollifier variable in time averages.
const MOLLIFY_PANELS: usize = 8;

fn rebuild(path: &SpaceTimePath, f: impl Fn(f64) -> Vec<f64>) -> Result<SpaceTimePath> {
    let mut data = Vec::with_capacity(path.data().len());
    for &t in path.times() {
        data.extend(f(t).into_iter().map(|v| v.clamp(0.0, 1.0)));
    }
    SpaceTimePath::new(path.times().to_vec(), path.grid(), data)
}

/// Hydrodynamic evolution from gamma on [0, eps], the same run backwards on
/// [eps, 2 eps], then the original path delayed by 2 eps (cut at T).
pub fn prepend_hydro(
    path: &SpaceTimePath,
    gamma: &DensityField,
    epsilon: f64,
    params: &ModelParams,
    coeffs: &TransportCoeffs,
) -> Result<SpaceTimePath> {
    if path.is_empty() {
        return Err(Error::InvalidParams("empty path".into()));
    }
    if !(epsilon > 0.0) || 2.0 * epsilon >= path.t_end() {
        return Err(Error::InvalidParams(format!("need 0 < 2 eps < T, got eps = {epsilon}")));
    }
    let dt = path.dt();
    let horizon = (epsilon / dt).ceil() * dt;
    let rho = solve_hydro(gamma, &params.with_horizon(horizon), coeffs, dt)?;
    rebuild(path, |t| {
        if t <= epsilon {
            rho.at_time(t)
        } else if t <= 2.0 * epsilon {
            rho.at_time(2.0 * epsilon - t)
        } else {
            path.at_time(t - 2.0 * epsilon)
        }
    })
}

/// (1 - eps) path + eps hydro, pointwise.
pub fn blend_with_hydro(path: &SpaceTimePath, hydro: &SpaceTimePath, epsilon: f64) -> Result<SpaceTimePath> {
    path.check_compatible(hydro)?;
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidParams(format!("blend weight {epsilon} outside [0, 1]")));
    }
    let data = path
        .data()
        .iter()
        .zip(hydro.data())
        .map(|(p, r)| ((1.0 - epsilon) * p + epsilon * r).clamp(0.0, 1.0))
        .collect();
    SpaceTimePath::new(path.times().to_vec(), path.grid(), data)
}

/// The path up to t0, frozen at its t0 value for `width`, then resumed
/// (delayed by `width`, cut at T).
pub fn hold_constant(path: &SpaceTimePath, t0: f64, width: f64) -> Result<SpaceTimePath> {
    if !(width >= 0.0) {
        return Err(Error::InvalidParams(format!("hold width {width} is negative")));
    }
    rebuild(path, |t| {
        if t <= t0 {
            path.at_time(t)
        } else if t <= t0 + width {
            path.at_time(t0)
        } else {
            path.at_time(t - width)
        }
    })
}

/// Unchanged on [0, b]; for t > b the forward average int iota_eps(s) pi(t + s) ds,
/// with pi held at its final value past T.
pub fn time_mollify(path: &SpaceTimePath, spec: &MollifierSpec, b: f64) -> Result<SpaceTimePath> {
    if path.is_empty() {
        return Ok(path.clone());
    }
    if spec.epsilon >= path.t_end() - b {
        return Err(Error::InvalidParams(format!(
            "mollifier width {} not below T - b = {}",
            spec.epsilon,
            path.t_end() - b
        )));
    }
    let rule = spec.rule(MOLLIFY_PANELS);
    let m = path.grid().len();
    rebuild(path, |t| {
        if t <= b {
            return path.at_time(t);
        }
        let mut acc = vec![0.0; m];
        for &(s, w) in &rule {
            for (a, v) in acc.iter_mut().zip(path.at_time(t + spec.epsilon * s)) {
                *a += w * v;
            }
        }
        acc
    })
}

/// rho* + R^D_{beta(t)}(pi_t - rho*) with beta(t) = j_eps(t - a); unchanged up to a.
pub fn resolvent_smooth(
    path: &SpaceTimePath,
    spec: &MollifierSpec,
    a: f64,
    params: &ModelParams,
) -> Result<SpaceTimePath> {
    let grid = path.grid();
    let star = linear_profile(params, grid);
    let star = star.values();
    let mut cache: HashMap<u64, Option<ResolventKernel>> = HashMap::new();
    let mut data = Vec::with_capacity(path.data().len());
    for (n, &t) in path.times().iter().enumerate() {
        let beta = if t <= a { 0.0 } else { spec.beta(t, a) };
        let kern = cache
            .entry(beta.to_bits())
            .or_insert_with(|| kernel_or_identity(KernelKind::Dirichlet, beta, grid));
        let pi = path.slice(n);
        match kern {
            None => data.extend_from_slice(pi),
            Some(k) => {
                let diff: Vec<f64> = pi.iter().zip(star).map(|(p, s)| p - s).collect();
                let sm = k.apply(&diff);
                data.extend(sm.iter().zip(star).map(|(d, s)| (s + d).clamp(0.0, 1.0)));
            }
        }
    }
    SpaceTimePath::new(path.times().to_vec(), grid, data)
}
