//! Model parameters, transport coefficients and the closed-form reversible measure.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::DensityField;
use crate::grid::SpaceGrid;
use crate::quad;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Lattice half-width; sites run over -N+1..=N-1.
    pub n: usize,
    pub e: f64,
    pub rho_minus: f64,
    pub rho_plus: f64,
    pub t: f64,
}

impl ModelParams {
    pub fn new(n: usize, e: f64, rho_minus: f64, rho_plus: f64, t: f64) -> Result<Self> {
        let p = ModelParams {
            n,
            e,
            rho_minus,
            rho_plus,
            t,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParams(format!("N = {} must be at least 2", self.n)));
        }
        if !(self.rho_minus > 0.0 && self.rho_minus <= self.rho_plus && self.rho_plus < 1.0) {
            return Err(Error::InvalidParams(format!(
                "need 0 < rho_minus <= rho_plus < 1, got {} and {}",
                self.rho_minus, self.rho_plus
            )));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::InvalidParams(format!("T = {} must be positive", self.t)));
        }
        if !self.e.is_finite() {
            return Err(Error::InvalidParams("E must be finite".into()));
        }
        Ok(())
    }

    pub fn with_horizon(&self, t: f64) -> Self {
        ModelParams { t, ..self.clone() }
    }

    pub fn with_size(&self, n: usize) -> Self {
        ModelParams { n, ..self.clone() }
    }

    /// Number of lattice sites, 2N - 1.
    pub fn sites(&self) -> usize {
        2 * self.n - 1
    }

    /// The linear profile joining the reservoir densities.
    pub fn linear_profile(&self, u: f64) -> f64 {
        self.rho_minus * (1.0 - u) / 2.0 + self.rho_plus * (1.0 + u) / 2.0
    }
}

pub fn mobility_chi0(a: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::DensityOutOfRange(a));
    }
    Ok(a * (1.0 - a))
}

#[inline]
pub(crate) fn chi0(a: f64) -> f64 {
    a * (1.0 - a)
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Chemical potentials of the reversible product measure.
#[derive(Debug, Clone)]
pub struct ReversibleField {
    pub e0: f64,
    /// phibar(x) for x = -N+1..=N-1, in site order.
    pub phibar: Vec<f64>,
}

pub fn reversible_field(params: &ModelParams) -> Result<ReversibleField> {
    params.validate()?;
    let phi_m = logit(params.rho_minus);
    let phi_p = logit(params.rho_plus);
    let n = params.n as f64;
    let phibar = (0..params.sites())
        .map(|i| {
            let x = i as f64 - (n - 1.0);
            phi_m * (n - x) / (2.0 * n) + phi_p * (n + x) / (2.0 * n)
        })
        .collect();
    Ok(ReversibleField {
        e0: (phi_p - phi_m) / 2.0,
        phibar,
    })
}

pub fn reversible_marginals(params: &ModelParams) -> Result<Vec<f64>> {
    Ok(reversible_field(params)?
        .phibar
        .into_iter()
        .map(logistic)
        .collect())
}

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const FD_STEP: f64 = 1e-6;

/// Diffusivity D and mobility chi, with optional derivatives and antiderivatives.
#[derive(Clone)]
pub struct TransportCoeffs {
    name: String,
    d: ScalarFn,
    chi: ScalarFn,
    d_prime: Option<ScalarFn>,
    chi_prime: Option<ScalarFn>,
    /// int_0^a D
    d_integral: Option<ScalarFn>,
    /// an antiderivative of D / chi
    h: Option<ScalarFn>,
    c0: f64,
}

impl fmt::Debug for TransportCoeffs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransportCoeffs")
            .field("name", &self.name)
            .field("c0", &self.c0)
            .finish()
    }
}

impl TransportCoeffs {
    /// Builds coefficients and fits the equivalence constant against a(1-a).
    pub fn new(name: &str, d: ScalarFn, chi: ScalarFn) -> Result<Self> {
        let mut c = TransportCoeffs {
            name: name.to_string(),
            d,
            chi,
            d_prime: None,
            chi_prime: None,
            d_integral: None,
            h: None,
            c0: 1.0,
        };
        c.c0 = c.fit_c0()?;
        Ok(c)
    }

    pub fn with_derivatives(mut self, d_prime: ScalarFn, chi_prime: ScalarFn) -> Self {
        self.d_prime = Some(d_prime);
        self.chi_prime = Some(chi_prime);
        self
    }

    pub fn with_antiderivatives(mut self, d_integral: ScalarFn, h: ScalarFn) -> Self {
        self.d_integral = Some(d_integral);
        self.h = Some(h);
        self
    }

    /// D = 1/2, chi = a(1 - a).
    pub fn wasep() -> Self {
        TransportCoeffs {
            name: "wasep".into(),
            d: Arc::new(|_| 0.5),
            chi: Arc::new(chi0),
            d_prime: Some(Arc::new(|_| 0.0)),
            chi_prime: Some(Arc::new(|a| 1.0 - 2.0 * a)),
            d_integral: Some(Arc::new(|a| 0.5 * a)),
            h: Some(Arc::new(|a| 0.5 * logit(a))),
            c0: 1.0,
        }
    }

    /// Named presets: "wasep" and "nonlinear" (density dependent D and chi).
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "wasep" => Ok(Self::wasep()),
            "nonlinear" => Ok(TransportCoeffs::new(
                "nonlinear",
                Arc::new(|a| 0.5 + 0.25 * a),
                Arc::new(|a| chi0(a) * (1.0 + 0.5 * a)),
            )?
            .with_derivatives(
                Arc::new(|_| 0.25),
                Arc::new(|a| (1.0 - 2.0 * a) * (1.0 + 0.5 * a) + 0.5 * chi0(a)),
            )),
            other => Err(Error::Config(format!("unknown coefficient preset '{other}'"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    #[inline]
    pub fn d(&self, a: f64) -> f64 {
        (self.d)(a)
    }

    #[inline]
    pub fn chi(&self, a: f64) -> f64 {
        (self.chi)(a)
    }

    pub fn d_prime(&self, a: f64) -> f64 {
        match &self.d_prime {
            Some(f) => f(a),
            None => (self.d(a + FD_STEP) - self.d(a - FD_STEP)) / (2.0 * FD_STEP),
        }
    }

    pub fn chi_prime(&self, a: f64) -> f64 {
        match &self.chi_prime {
            Some(f) => f(a),
            None => (self.chi(a + FD_STEP) - self.chi(a - FD_STEP)) / (2.0 * FD_STEP),
        }
    }

    /// d(a) = int_0^a D, so that d(0) = 0.
    pub fn d_integral(&self, a: f64) -> f64 {
        match &self.d_integral {
            Some(f) => f(a),
            None => quad::integrate(|s| self.d(s), 0.0, a, 16),
        }
    }

    /// h(b) - h(a) with h' = D / chi, integrated on [a, b] only.
    pub fn delta_h(&self, a: f64, b: f64) -> f64 {
        match &self.h {
            Some(h) => h(b) - h(a),
            None => quad::integrate(|s| self.d(s) / self.chi(s), a, b, 64),
        }
    }

    pub fn max_d(&self) -> f64 {
        (0..=1000)
            .map(|i| self.d(i as f64 / 1000.0))
            .fold(0.0, f64::max)
    }

    fn fit_c0(&self) -> Result<f64> {
        let mut c0: f64 = 1.0;
        for i in 0..=1000 {
            let a = i as f64 / 1000.0;
            let d = self.d(a);
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::InvalidParams(format!("D({a}) = {d} is not positive")));
            }
            if i == 0 || i == 1000 {
                continue;
            }
            let ratio = self.chi(a) / chi0(a);
            if !(ratio > 0.0 && ratio.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "chi({a}) is not comparable to a(1-a)"
                )));
            }
            c0 = c0.max(ratio).max(1.0 / ratio);
        }
        Ok(c0)
    }

    /// Checks the two-sided bound against a(1-a) on 10^3 sample points.
    pub fn validate(&self) -> Result<()> {
        let fitted = self.fit_c0()?;
        if fitted > self.c0 * (1.0 + 1e-12) {
            return Err(Error::InvalidParams(format!(
                "mobility bound fails: needs C0 = {fitted}, have {}",
                self.c0
            )));
        }
        Ok(())
    }
}

/// The linear profile rho* sampled on a grid.
pub fn linear_profile(params: &ModelParams, grid: SpaceGrid) -> DensityField {
    DensityField::from_fn(grid, |u| params.linear_profile(u))
}
