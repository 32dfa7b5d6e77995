use crate::error::{Error, Result};
use crate::field::{DensityField, SpaceTimePath};
use crate::grid::{gradient, time_weights};
use crate::model::{ModelParams, TransportCoeffs};

use super::basis::{maximize_quadratic, separable_gram};
use super::control::check_interior;
use super::{
    sbp_integral, solve_control_h_full, ControlField, Flagged, Flags, MomentumField, RateReport,
    TestBasis, DELTA_FLOOR,
};

/// Relative tolerance between the quadratic and the expanded control forms.
const EXPANDED_TOL: f64 = 2e-3;
const START_TOL: f64 = 1e-8;

fn check_start(path: &SpaceTimePath, gamma: &DensityField) -> Result<()> {
    if path.is_empty() {
        return Err(Error::InvalidParams("empty path".into()));
    }
    if gamma.grid() != path.grid() {
        return Err(Error::GridMismatch("initial profile on a different grid".into()));
    }
    let gap = gamma.sup_distance(&path.field(0));
    if gap > START_TOL {
        return Err(Error::StartMismatch(gap));
    }
    Ok(())
}

fn dot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, a), b)| w * a * b).sum()
}

/// <pi_T, H_T> - <gamma, H_0> - int <pi, d_t H>, with the time integral taken
/// by the midpoint rule on each step.
fn time_terms(path: &SpaceTimePath, h: &ControlField, gamma: &[f64], ws: &[f64]) -> f64 {
    let nt = path.n_times();
    let mut s = dot(ws, path.slice(nt - 1), h.slice(nt - 1)) - dot(ws, gamma, h.slice(0));
    for n in 0..nt.saturating_sub(1) {
        let (a, b) = (path.slice(n), path.slice(n + 1));
        let (ha, hb) = (h.slice(n), h.slice(n + 1));
        for i in 0..ws.len() {
            s -= ws[i] * 0.5 * (a[i] + b[i]) * (hb[i] - ha[i]);
        }
    }
    s
}

/// The eight-term functional J_H(pi).
pub fn j_hat(
    path: &SpaceTimePath,
    h: &ControlField,
    gamma: &DensityField,
    params: &ModelParams,
    coeffs: &TransportCoeffs,
) -> Result<f64> {
    j_hat_with_offset(path, h, gamma, params, coeffs, 0.0)
}

/// J_H with d replaced by d + offset; the value must not depend on the offset.
pub fn j_hat_with_offset(
    path: &SpaceTimePath,
    h: &ControlField,
    gamma: &DensityField,
    params: &ModelParams,
    coeffs: &TransportCoeffs,
    offset: f64,
) -> Result<f64> {
    if h.grid() != path.grid() || h.n_times() != path.n_times() {
        return Err(Error::GridMismatch("control and path grids differ".into()));
    }
    if path.is_empty() {
        return Ok(0.0);
    }
    let grid = path.grid();
    let ws = grid.trapezoid_weights();
    let wt = time_weights(path.n_times(), path.dt());
    let m = grid.len();
    let d_plus = coeffs.d_integral(params.rho_plus) + offset;
    let d_minus = coeffs.d_integral(params.rho_minus) + offset;

    let mut total = time_terms(path, h, gamma.values(), &ws);
    for (n, wtn) in wt.iter().enumerate() {
        let pi = path.slice(n);
        let g = h.grad_slice(n);
        let d: Vec<f64> = pi.iter().map(|&p| coeffs.d_integral(p) + offset).collect();
        let chi: Vec<f64> = pi.iter().map(|&p| coeffs.chi(p)).collect();
        let mut s = -sbp_integral(&d, g) + d_plus * g[m - 1] - d_minus * g[0];
        for i in 0..m {
            s -= ws[i] * chi[i] * (0.5 * params.e * g[i] + 0.5 * g[i] * g[i]);
        }
        total += wtn * s;
    }
    Ok(total)
}

/// I_T = 1/2 int <chi(pi), (grad H)^2> with H the optimal control.
pub fn rate_i_control(
    path: &SpaceTimePath,
    gamma: &DensityField,
    params: &ModelParams,
    coeffs: &TransportCoeffs,
) -> Result<RateReport> {
    check_start(path, gamma)?;
    let sol = solve_control_h_full(path, params, coeffs)?;
    let h = &sol.field;
    let grid = path.grid();
    let ws = grid.trapezoid_weights();
    let wt = time_weights(path.n_times(), path.dt());
    let mut quad = 0.0;
    let mut rest = 0.0;
    for (n, wtn) in wt.iter().enumerate() {
        let pi = path.slice(n);
        let gp = gradient(pi, grid.h());
        let gh = h.grad_slice(n);
        let mut q = 0.0;
        let mut r = 0.0;
        for i in 0..pi.len() {
            let chi = coeffs.chi(pi[i]);
            q += ws[i] * chi * gh[i] * gh[i];
            r += ws[i] * (coeffs.d(pi[i]) * gp[i] - 0.5 * params.e * chi) * gh[i];
        }
        quad += wtn * q;
        rest += wtn * r;
    }
    let value = 0.5 * quad;
    let expanded = time_terms(path, h, path.slice(0), &ws) + rest - 0.5 * quad;
    let gap = (value - expanded).abs();
    let mut report = RateReport::new(value)
        .residual("expanded_form", expanded)
        .residual("expanded_gap", gap)
        .residual("control_equation", sol.residual)
        .residual("mean_zero_gap", sol.mean_zero_gap);
    report.flags.mismatch = gap > EXPANDED_TOL * value.abs().max(1.0);
    Ok(report)
}

/// I_T = 1/2 int { <(P - D grad pi + (E/2) chi)^2 / chi> - R_t }.
pub fn rate_i_explicit(
    path: &SpaceTimePath,
    gamma: &DensityField,
    params: &ModelParams,
    coeffs: &TransportCoeffs,
) -> Result<RateReport> {
    check_start(path, gamma)?;
    let sol = solve_control_h_full(path, params, coeffs)?;
    let mut p = MomentumField::from_control(&sol);
    p.normalize(path, coeffs);
    rate_i_explicit_with(path, &p, params, coeffs)
}

/// The explicit formula for a momentum already in the mean-zero gauge.
pub fn rate_i_explicit_with(
    path: &SpaceTimePath,
    p: &MomentumField,
    params: &ModelParams,
    coeffs: &TransportCoeffs,
) -> Result<RateReport> {
    let grid = path.grid();
    let ws = grid.trapezoid_weights();
    let wt = time_weights(path.n_times(), path.dt());
    let delta_h = coeffs.delta_h(params.rho_minus, params.rho_plus);
    let mut flags = Flags::default();
    let mut total = 0.0;
    let mut r_max: f64 = 0.0;
    let mut gauge: f64 = 0.0;
    for (n, wtn) in wt.iter().enumerate() {
        let pi = path.slice(n);
        let gp = gradient(pi, grid.h());
        let pv = p.slice(n);
        let mut inv = 0.0;
        let mut q2 = 0.0;
        let mut qm = 0.0;
        let mut capped = false;
        for i in 0..pi.len() {
            let chi = coeffs.chi(pi[i]);
            if chi < DELTA_FLOOR {
                capped = true;
            }
            let r = 1.0 / chi.max(DELTA_FLOOR);
            let q = pv[i] - coeffs.d(pi[i]) * gp[i] + 0.5 * params.e * chi;
            inv += ws[i] * r;
            q2 += ws[i] * q * q * r;
            qm += ws[i] * q * r;
        }
        // in the mean-zero gauge <Q/chi> = E - delta h up to quadrature error
        gauge = gauge.max((qm - (params.e - delta_h)).abs());
        let r_t = if capped {
            flags.infinite = true;
            0.0
        } else {
            (delta_h - params.e).powi(2) / inv
        };
        r_max = r_max.max(r_t);
        total += wtn * (q2 - r_t);
    }
    let mut report = RateReport::new(0.5 * total).residual("max_r_t", r_max)
        .residual("gauge_gap", gauge);
    report.flags = flags;
    Ok(report)
}

/// Exact maximum of J_H over the span of the basis.
pub fn rate_i_variational(
    path: &SpaceTimePath,
    gamma: &DensityField,
    basis: &TestBasis,
    params: &ModelParams,
    coeffs: &TransportCoeffs,
) -> Result<RateReport> {
    if gamma.grid() != path.grid() {
        return Err(Error::GridMismatch("initial profile on a different grid".into()));
    }
    let grid = path.grid();
    let nodes = grid.nodes();
    let ws = grid.trapezoid_weights();
    let nt = path.n_times();
    let wt = time_weights(nt, path.dt());
    let (s, ds) = basis.space_table(&nodes);
    let tau = basis.time_table(path.times());
    let m = nodes.len();
    let (kk, ll) = (basis.k, basis.l);
    let d_plus = coeffs.d_integral(params.rho_plus);
    let d_minus = coeffs.d_integral(params.rho_minus);

    let mut lin = vec![0.0; kk * ll];
    let g0 = gamma.values();
    let p0 = path.slice(0);
    for k in 0..kk {
        let a: f64 = (0..m).map(|i| ws[i] * (p0[i] - g0[i]) * s[k][i]).sum();
        for l in 0..ll {
            lin[k * ll + l] += tau[l][0] * a;
        }
    }
    for n in 0..nt {
        let pi = path.slice(n);
        let d: Vec<f64> = pi.iter().map(|&p| coeffs.d_integral(p)).collect();
        let chi: Vec<f64> = pi.iter().map(|&p| coeffs.chi(p)).collect();
        let next = (n + 1 < nt).then(|| path.slice(n + 1));
        for k in 0..kk {
            let sk = &ds[k];
            let mut space = -sbp_integral(&d, sk) + d_plus * sk[m - 1] - d_minus * sk[0];
            space -= 0.5 * params.e * dot(&ws, &chi, sk);
            let step = next.map(|b| (0..m).map(|i| ws[i] * (b[i] - pi[i]) * s[k][i]).sum::<f64>());
            for l in 0..ll {
                let mut v = wt[n] * tau[l][n] * space;
                if let Some(step) = step {
                    v += 0.5 * (tau[l][n] + tau[l][n + 1]) * step;
                }
                lin[k * ll + l] += v;
            }
        }
    }
    let weight: Vec<f64> = path.data().iter().map(|&p| coeffs.chi(p)).collect();
    let g = separable_gram(&ds, &ws, &weight, &tau, &wt);
    let (v, ridge) = maximize_quadratic(g, &lin);
    let mut report = RateReport::new(0.5 * v.max(0.0)).residual("basis_dim", basis.dim() as f64);
    report.flags.ridge = ridge;
    Ok(report)
}

/// int dt { <P^2 / chi> - <P / chi>^2 / <1 / chi> }.
pub fn hminus1_norm(
    p: &MomentumField,
    path: &SpaceTimePath,
    coeffs: &TransportCoeffs,
) -> Result<Flagged> {
    if p.grid() != path.grid() || p.times().len() != path.n_times() {
        return Err(Error::GridMismatch("momentum and path grids differ".into()));
    }
    let ws = path.grid().trapezoid_weights();
    let wt = time_weights(path.n_times(), path.dt());
    let mut flags = Flags::default();
    let mut total = 0.0;
    for (n, wtn) in wt.iter().enumerate() {
        let pi = path.slice(n);
        let pv = p.slice(n);
        let (mut inv, mut p2, mut pm) = (0.0, 0.0, 0.0);
        let mut capped = false;
        for i in 0..pi.len() {
            let chi = coeffs.chi(pi[i]);
            if chi < DELTA_FLOOR {
                capped = true;
            }
            let r = 1.0 / chi.max(DELTA_FLOOR);
            inv += ws[i] * r;
            p2 += ws[i] * pv[i] * pv[i] * r;
            pm += ws[i] * pv[i] * r;
        }
        let c_t = if capped {
            flags.infinite = true;
            0.0
        } else {
            pm * pm / inv
        };
        total += wtn * (p2 - c_t);
    }
    Ok(Flagged {
        value: total,
        flags,
    })
}

/// sup over the basis span of 2<<P, grad G>> - <<chi (grad G)^2>>.
pub fn hminus1_norm_variational(
    p: &MomentumField,
    path: &SpaceTimePath,
    coeffs: &TransportCoeffs,
    basis: &TestBasis,
) -> Result<Flagged> {
    let chi = check_interior(path, coeffs)?;
    let grid = path.grid();
    let nodes = grid.nodes();
    let ws = grid.trapezoid_weights();
    let wt = time_weights(path.n_times(), path.dt());
    let (_, ds) = basis.space_table(&nodes);
    let tau = basis.time_table(path.times());
    let mut b = vec![0.0; basis.dim()];
    for (n, wtn) in wt.iter().enumerate() {
        let pv = p.slice(n);
        for k in 0..basis.k {
            let a = dot(&ws, pv, &ds[k]);
            for l in 0..basis.l {
                b[k * basis.l + l] += wtn * tau[l][n] * a;
            }
        }
    }
    let g = separable_gram(&ds, &ws, &chi, &tau, &wt);
    let (v, ridge) = maximize_quadratic(g, &b);
    Ok(Flagged {
        value: v,
        flags: Flags {
            ridge,
            ..Flags::default()
        },
    })
}
