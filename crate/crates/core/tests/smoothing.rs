use std::f64::consts::PI;

use proptest::prelude::*;

use wasep::field::uniform_times;
use wasep::grid::gradient;
use wasep::hydro::solve_hydro;
use wasep::model::linear_profile;
use wasep::rate::energy_q;
use wasep::smoothing::*;
use wasep::{DensityField, Error, ModelParams, SpaceGrid, SpaceTimePath, TransportCoeffs};

fn params() -> ModelParams {
    ModelParams::new(64, 1.0, 0.2, 0.8, 1.0).unwrap()
}

fn sine(k: usize, u: f64) -> f64 {
    (k as f64 * PI * (1.0 + u) / 2.0).sin()
}

fn wavy(p: &ModelParams, m: usize, steps: usize) -> SpaceTimePath {
    SpaceTimePath::from_fn(uniform_times(p.t, steps), SpaceGrid::new(m), |t, u| {
        p.linear_profile(u) + 0.08 * (PI * t).sin() * sine(1, u) + 0.04 * t * sine(3, u)
    })
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn mean_sq(grid: SpaceGrid, f: &[f64]) -> f64 {
    grid.integrate(&f.iter().map(|v| v * v).collect::<Vec<_>>())
}

#[test]
fn neumann_rows_sum_to_one() {
    let grid = SpaceGrid::new(128);
    for eps in [2.0, 0.05, 1e-3, 1e-6, 1e-8] {
        let k = resolvent_kernel(KernelKind::Neumann, eps, grid).unwrap();
        for i in 0..grid.len() {
            assert!((k.row_sum(i) - 1.0).abs() < 1e-8, "eps {eps} row {i}: {}", k.row_sum(i));
        }
    }
}

#[test]
fn kernels_are_symmetric_and_nonnegative() {
    for kind in [KernelKind::Dirichlet, KernelKind::Neumann] {
        for eps in [1e-4, 0.02, 1.0] {
            for &(u, v) in &[(-0.9, 0.3), (0.0, 0.1), (0.5, 0.95), (-1.0, 1.0)] {
                let a = kernel_value(kind, eps, u, v);
                let b = kernel_value(kind, eps, v, u);
                assert!(a >= -1e-15);
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
            }
        }
    }
}

#[test]
fn large_lambda_stays_finite() {
    let k = resolvent_kernel(KernelKind::Neumann, 1e-8, SpaceGrid::new(64)).unwrap();
    assert!(k.lambda() == 1e8);
    assert!((0..65).all(|i| k.row(i).iter().all(|w| w.is_finite())));
    assert!(matches!(
        resolvent_kernel(KernelKind::Dirichlet, 1e-10, SpaceGrid::new(64)),
        Err(Error::ResolventUnderResolved(_))
    ));
}

#[test]
fn dirichlet_eigenfunction() {
    let grid = SpaceGrid::new(256);
    let f: Vec<f64> = grid.nodes().iter().map(|&u| sine(1, u)).collect();
    for eps in [0.01, 0.1, 1.0] {
        let k = resolvent_kernel(KernelKind::Dirichlet, eps, grid).unwrap();
        let out = k.apply(&f);
        let factor = 1.0 / (1.0 + eps * (PI / 2.0).powi(2));
        let expect: Vec<f64> = f.iter().map(|v| v * factor).collect();
        assert!(max_diff(&out, &expect) < 1e-4, "eps {eps}: {:e}", max_diff(&out, &expect));
    }
}

#[test]
fn neumann_keeps_constants() {
    let grid = SpaceGrid::new(64);
    let k = resolvent_kernel(KernelKind::Neumann, 0.03, grid).unwrap();
    let c = DensityField::constant(grid, 0.42);
    let out = apply_resolvent(&c, &k).unwrap();
    assert!(out.values().iter().all(|v| (v - 0.42).abs() < 1e-12));
}

#[test]
fn apply_rejects_other_grids() {
    let k = resolvent_kernel(KernelKind::Neumann, 0.03, SpaceGrid::new(64)).unwrap();
    let f = DensityField::constant(SpaceGrid::new(32), 0.5);
    assert!(matches!(apply_resolvent(&f, &k), Err(Error::GridMismatch(_))));
}

/// max |d(R^D f) - R^N (df)| for f vanishing at both ends.
fn intertwining_error(m: usize, eps: f64) -> f64 {
    let grid = SpaceGrid::new(m);
    let f: Vec<f64> = grid.nodes().iter().map(|&u| (1.0 - u * u) * (0.4 + (2.0 * u + 0.3).sin())).collect();
    let kd = resolvent_kernel(KernelKind::Dirichlet, eps, grid).unwrap();
    let kn = resolvent_kernel(KernelKind::Neumann, eps, grid).unwrap();
    max_diff(&gradient(&kd.apply(&f), grid.h()), &kn.apply(&gradient(&f, grid.h())))
}

#[test]
fn gradient_intertwines_the_two_kernels() {
    let errs: Vec<f64> = [64, 128, 256].iter().map(|&m| intertwining_error(m, 0.05)).collect();
    for w in errs.windows(2) {
        // second order: halving h divides the error by about four
        assert!(w[0] / w[1] > 3.0, "{errs:?}");
    }
    assert!(errs[2] < 1e-3);
}

#[test]
fn resolvent_inverts_the_shifted_laplacian() {
    // (I - eps Lap) R f = f at interior nodes, up to O(h^2)
    let eps = 0.05;
    let mut prev = f64::INFINITY;
    for m in [64, 128, 256] {
        let grid = SpaceGrid::new(m);
        let h = grid.h();
        let f: Vec<f64> = grid.nodes().iter().map(|&u| (3.0 * u).cos() + u).collect();
        let mut worst: f64 = 0.0;
        for kind in [KernelKind::Dirichlet, KernelKind::Neumann] {
            let r = resolvent_kernel(kind, eps, grid).unwrap().apply(&f);
            for i in 1..m {
                let lap = (r[i + 1] - 2.0 * r[i] + r[i - 1]) / (h * h);
                worst = worst.max((r[i] - eps * lap - f[i]).abs());
            }
        }
        assert!(worst < prev / 3.0, "m = {m}: {worst:e} after {prev:e}");
        prev = worst;
    }
    assert!(prev < 1e-3);
}

#[test]
fn mollifier_shape() {
    let spec = MollifierSpec::new(0.1).unwrap();
    let n = 20000;
    let total: f64 = (0..n).map(|i| spec.iota((i as f64 + 0.5) / n as f64)).sum::<f64>() / n as f64;
    assert!((total - 1.0).abs() < 1e-10, "{total}");
    let weights: f64 = spec.rule(8).iter().map(|(_, w)| w).sum();
    assert!((weights - 1.0).abs() < 1e-12);
    let mut prev = -1.0;
    for i in -10..=110 {
        let t = i as f64 / 100.0;
        assert!(spec.iota(t) >= 0.0);
        let j = spec.switch(t);
        assert!(j >= prev);
        prev = j;
    }
    assert_eq!(spec.switch(0.0), 0.0);
    assert_eq!(spec.switch(1.0), 1.0);
    assert!((spec.j_eps(0.5) - 0.1).abs() < 1e-15);
    assert_eq!(spec.beta(0.3, 0.3), 0.0);
    assert!(MollifierSpec::new(0.0).is_err());
}

#[test]
fn prepend_examples() {
    let p = params();
    let coeffs = TransportCoeffs::wasep();
    let path = wavy(&p, 64, 200);
    let gamma = path.field(0);
    let eps = 0.1;
    let out = prepend_hydro(&path, &gamma, eps, &p, &coeffs).unwrap();
    assert!(out.field(0).sup_distance(&gamma) < 1e-12);
    let k = (2.0 * eps / out.dt()).round() as usize;
    assert!(out.field(k).sup_distance(&gamma) < 1e-12);
    let hydro = solve_hydro(&gamma, &p.with_horizon(eps), &coeffs, path.dt()).unwrap();
    let bound = energy_q(&path).value + 2.0 * energy_q(&hydro).value;
    assert!(energy_q(&out).value <= bound * (1.0 + 1e-3));
    assert!(prepend_hydro(&path, &gamma, 0.6, &p, &coeffs).is_err());
}

#[test]
fn blend_examples() {
    let p = params();
    let coeffs = TransportCoeffs::wasep();
    let path = wavy(&p, 64, 100);
    let hydro = solve_hydro(&path.field(0), &p, &coeffs, path.dt()).unwrap();
    assert_eq!(blend_with_hydro(&path, &hydro, 0.0).unwrap().max_abs_diff(&path).unwrap(), 0.0);
    assert_eq!(blend_with_hydro(&path, &hydro, 1.0).unwrap().max_abs_diff(&hydro).unwrap(), 0.0);
    for eps in [0.1, 0.3, 0.7] {
        let b = blend_with_hydro(&path, &hydro, eps).unwrap();
        let rhs = (1.0 - eps) * energy_q(&path).value + eps * energy_q(&hydro).value;
        assert!(energy_q(&b).value <= rhs + 1e-10);
    }
    assert!(blend_with_hydro(&path, &hydro, 1.5).is_err());
}

#[test]
fn mollifying_a_static_path_changes_nothing() {
    let p = params();
    let path = SpaceTimePath::constant(&linear_profile(&p, SpaceGrid::new(32)), uniform_times(1.0, 50));
    let out = time_mollify(&path, &MollifierSpec::new(0.2).unwrap(), 0.1).unwrap();
    assert!(out.max_abs_diff(&path).unwrap() < 1e-14);
}

#[test]
fn mollified_path_converges() {
    let p = params();
    let path = wavy(&p, 64, 400);
    let grid = path.grid();
    let dist = |eps: f64| {
        let out = time_mollify(&path, &MollifierSpec::new(eps).unwrap(), 0.0).unwrap();
        (0..path.n_times())
            .map(|n| {
                let d: Vec<f64> = out.slice(n).iter().zip(path.slice(n)).map(|(a, b)| a - b).collect();
                mean_sq(grid, &d).sqrt()
            })
            .fold(0.0, f64::max)
    };
    let ds: Vec<f64> = (2..7).map(|k| dist(0.5f64.powi(k))).collect();
    for w in ds.windows(2) {
        assert!(w[1] < w[0], "{ds:?}");
    }
    assert!(ds[4] < 1e-2);
}

#[test]
fn mollifying_keeps_a_flat_stretch_flat() {
    let p = params();
    let moving = wavy(&p, 32, 400);
    // frozen on [0.2, 0.5]
    let held = hold_constant(&moving, 0.2, 0.3).unwrap();
    let (b, a, eps) = (0.2, 0.3, 0.1);
    let out = time_mollify(&held, &MollifierSpec::new(eps).unwrap(), b).unwrap();
    let base = held.at_time(b);
    for (n, &t) in out.times().iter().enumerate() {
        if t >= b && t <= b + a - eps - 1e-9 {
            assert!(max_diff(out.slice(n), &base) < 1e-12, "t = {t}");
        }
    }
}

#[test]
fn resolvent_smoothing_intertwines_and_dissipates() {
    let p = params();
    let (a, eps) = (0.1, 0.05);
    let spec = MollifierSpec::new(eps).unwrap();
    let mut errs = vec![];
    for m in [64, 128, 256] {
        let path = wavy(&p, m, 50);
        let grid = path.grid();
        let out = resolvent_smooth(&path, &spec, a, &p).unwrap();
        let mut err: f64 = 0.0;
        for (n, &t) in path.times().iter().enumerate() {
            if t <= a {
                assert_eq!(out.slice(n), path.slice(n));
                continue;
            }
            let g_out = gradient(out.slice(n), grid.h());
            let g_in = gradient(path.slice(n), grid.h());
            assert!(mean_sq(grid, &g_out) <= mean_sq(grid, &g_in) * (1.0 + 1e-6));
            let kn = resolvent_kernel(KernelKind::Neumann, spec.beta(t, a), grid).unwrap();
            err = err.max(max_diff(&g_out, &kn.apply(&g_in)));
        }
        errs.push(err);
    }
    assert!(errs[0] / errs[1] > 3.0 && errs[1] / errs[2] > 3.0, "{errs:?}");
}

#[test]
fn interiority_ratio_constant_is_stable() {
    let p = params();
    let path = wavy(&p, 128, 50);
    let chi0 = |x: f64| x * (1.0 - x);
    let fit = |eps: f64| {
        let spec = MollifierSpec::new(eps).unwrap();
        let out = resolvent_smooth(&path, &spec, 0.0, &p).unwrap();
        let mut c0: f64 = 0.0;
        for (n, &t) in path.times().iter().enumerate().skip(1) {
            let kn = resolvent_kernel(KernelKind::Neumann, spec.beta(t, 0.0), path.grid()).unwrap();
            let rn = kn.apply(path.slice(n));
            for (r, o) in rn.iter().zip(out.slice(n)) {
                c0 = c0.max(chi0(*r) / chi0(*o));
            }
        }
        c0
    };
    let cs: Vec<f64> = [0.1, 0.05, 0.025, 0.0125].iter().map(|&e| fit(e)).collect();
    assert!(cs.iter().all(|c| c.is_finite() && *c >= 1.0 - 1e-9), "{cs:?}");
    let (lo, hi) = cs.iter().fold((f64::INFINITY, 0.0f64), |(l, h), c| (l.min(*c), h.max(*c)));
    assert!(hi / lo < 1.5, "{cs:?}");
}

fn hydro_density_report() -> DensityReport {
    let p = params();
    let coeffs = TransportCoeffs::wasep();
    let grid = SpaceGrid::new(128);
    let gamma = DensityField::from_fn(grid, |u| p.linear_profile(u) + 0.1 * sine(1, u));
    let hydro = solve_hydro(&gamma, &p, &coeffs, 1.0 / 1024.0).unwrap();
    let eps: Vec<f64> = (6..=10).map(|k| 0.5f64.powi(k)).collect();
    density_check(&hydro, &gamma, &eps, &p, &coeffs).unwrap()
}

#[test]
fn smoothing_a_hydro_path_stays_nearly_free() {
    let rep = hydro_density_report();
    assert!(rep.target < 1e-6);
    for r in &rep.rows {
        assert!(r.rate <= 1e-4, "eps {}: {:e}", r.epsilon, r.rate);
    }
}

#[test]
fn smoothed_hydro_cost_is_first_order_in_epsilon() {
    // the time-reversed hydro piece is not free: its cost is about eps times
    // the initial dissipation rate
    let rep = hydro_density_report();
    let slopes: Vec<f64> = rep.rows.iter().map(|r| r.rate / r.epsilon).collect();
    assert!(slopes.iter().all(|s| *s > 0.0 && *s < 0.2), "{slopes:?}");
    for w in rep.rows.windows(2) {
        assert!(w[1].rate < 0.75 * w[0].rate);
    }
}

#[test]
fn density_report_shrinks_with_epsilon() {
    let p = params();
    let coeffs = TransportCoeffs::wasep();
    let path = wavy(&p, 128, 1024);
    let rep = density_check(&path, &path.field(0), &[1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0], &p, &coeffs).unwrap();
    assert!(rep.l1_monotone);
    assert_eq!(rep.finest().unwrap().epsilon, 1.0 / 64.0);
    let gaps: Vec<f64> = rep.rows.iter().map(|r| (r.rate - rep.target).abs()).collect();
    assert!(gaps[2] < gaps[0], "{gaps:?}");
}

fn field_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..=1.0, 33)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn neumann_respects_bounds(f in field_strategy(), eps in 1e-4f64..1.0) {
        let grid = SpaceGrid::new(32);
        let k = resolvent_kernel(KernelKind::Neumann, eps, grid).unwrap();
        let (lo, hi) = f.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
        for v in k.apply(&f) {
            prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
    }

    #[test]
    fn smoothing_keeps_values_in_range_and_pins_the_ends(
        amp in 0.0f64..0.6, w in 0.5f64..6.0, eps in 0.02f64..0.2,
    ) {
        let p = params();
        let coeffs = TransportCoeffs::wasep();
        // large excursions that touch 0 and 1 inside, pinned to rho_+- at the ends
        let path = SpaceTimePath::from_fn(uniform_times(1.0, 60), SpaceGrid::new(32), |t, u| {
            (p.linear_profile(u) + amp * (w * t).sin() * sine(1, u) * 2.0).clamp(0.0, 1.0)
        });
        let gamma = path.field(0);
        let hydro = solve_hydro(&gamma, &p, &coeffs, path.dt()).unwrap();
        let outs = [
            prepend_hydro(&path, &gamma, eps, &p, &coeffs).unwrap(),
            blend_with_hydro(&path, &hydro, eps).unwrap(),
            time_mollify(&path, &MollifierSpec::new(eps).unwrap(), 0.1).unwrap(),
            resolvent_smooth(&path, &MollifierSpec::new(eps).unwrap(), 0.1, &p).unwrap(),
        ];
        let m = path.grid().len();
        for out in &outs {
            for v in out.data() {
                prop_assert!((0.0..=1.0).contains(v));
            }
            for n in 1..out.n_times() {
                let s = out.slice(n);
                prop_assert!((s[0] - p.rho_minus).abs() < 1e-12);
                prop_assert!((s[m - 1] - p.rho_plus).abs() < 1e-12);
            }
        }
    }
}
