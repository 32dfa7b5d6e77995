use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::field::{DensityField, SpaceTimePath};
use crate::hydro::solve_hydro;
use crate::micro::worker_pool;
use crate::model::{ModelParams, TransportCoeffs};
use crate::rate::{rate_i_control, Flags};

use super::constructions::{
    blend_with_hydro, hold_constant, prepend_hydro, resolvent_smooth, time_mollify,
};
use super::mollifier::MollifierSpec;

#[derive(Debug, Clone, Serialize)]
pub struct DensityRow {
    pub epsilon: f64,
    /// int int |smoothed - path| du dt
    pub l1_distance: f64,
    pub rate: f64,
    pub flags: Flags,
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityReport {
    /// Cost of the input path.
    pub target: f64,
    pub rows: Vec<DensityRow>,
    /// Whether the L1 distance decreases along the given (decreasing) epsilons.
    pub l1_monotone: bool,
}

impl DensityReport {
    /// Row with the smallest epsilon.
    pub fn finest(&self) -> Option<&DensityRow> {
        self.rows
            .iter()
            .min_by(|a, b| a.epsilon.total_cmp(&b.epsilon))
    }
}

/// All four constructions for one master epsilon: hydro prepend over 2 eps,
/// blend with weight eps, a hold of length eps at t = eps so the forward
/// mollification (width eps/2, from b = eps) starts from a flat piece, then
/// resolvent smoothing switched on over [eps, 5 eps/4].
pub fn smooth_chain(
    path: &SpaceTimePath,
    gamma: &DensityField,
    hydro: &SpaceTimePath,
    epsilon: f64,
    params: &ModelParams,
    coeffs: &TransportCoeffs,
) -> Result<SpaceTimePath> {
    let p = prepend_hydro(path, gamma, epsilon, params, coeffs)?;
    let p = blend_with_hydro(&p, hydro, epsilon)?;
    let p = hold_constant(&p, epsilon, epsilon)?;
    let p = time_mollify(&p, &MollifierSpec::new(epsilon / 2.0)?, epsilon)?;
    resolvent_smooth(&p, &MollifierSpec::new(epsilon / 4.0)?, epsilon, params)
}

pub fn density_check(
    path: &SpaceTimePath,
    gamma: &DensityField,
    epsilons: &[f64],
    params: &ModelParams,
    coeffs: &TransportCoeffs,
) -> Result<DensityReport> {
    let target = rate_i_control(path, gamma, params, coeffs)?.value;
    let hydro = solve_hydro(gamma, &params.with_horizon(path.t_end()), coeffs, path.dt())?;
    let rows: Vec<DensityRow> = worker_pool().install(|| {
        epsilons
            .par_iter()
            .map(|&eps| {
                let sm = smooth_chain(path, gamma, &hydro, eps, params, coeffs)?;
                let r = rate_i_control(&sm, gamma, params, coeffs)?;
                Ok(DensityRow {
                    epsilon: eps,
                    l1_distance: sm.l1_distance(path)?,
                    rate: r.value,
                    flags: r.flags,
                })
            })
            .collect::<Result<_>>()
    })?;
    let mut monotone = true;
    for w in rows.windows(2) {
        let shrinking = w[1].epsilon < w[0].epsilon;
        if shrinking && w[1].l1_distance > w[0].l1_distance {
            warn!(
                "L1 distance grows from {:e} to {:e} as eps goes {} -> {}",
                w[0].l1_distance, w[1].l1_distance, w[0].epsilon, w[1].epsilon
            );
            monotone = false;
        }
    }
    Ok(DensityReport {
        target,
        rows,
        l1_monotone: monotone,
    })
}
