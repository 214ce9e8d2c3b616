//! The W-functional in Kahler normalization, in the `f` form and the `u = e^{-f/2}` form.

use std::f64::consts::PI;

use kahler_kernel::{HermitianMetricField, ScalarField};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geo::Geo;

/// Tolerance on `(2 pi sigma)^{-n} int e^{-f} dV = 1`.
pub const CONSTRAINT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WValue {
    pub value: f64,
    /// `(2 pi sigma)^{-n} int e^{-f} dV - 1`.
    pub constraint_error: f64,
    pub constraint_violated: bool,
}

impl WValue {
    fn new(value: f64, constraint_error: f64) -> Self {
        WValue {
            value,
            constraint_error,
            constraint_violated: constraint_error.abs() > CONSTRAINT_TOL,
        }
    }
}

pub(crate) fn normalization(n: usize, sigma: f64) -> f64 {
    (2.0 * PI * sigma).powi(-(n as i32))
}

pub(crate) fn w_f(geo: &Geo, f: &[f64], sigma: f64) -> WValue {
    let n = geo.complex_dim();
    let c = normalization(n, sigma);
    let r = geo.scalar();
    let g2 = geo.grad_norm2(f);
    let dv = geo.dv();
    let mut w = 0.0;
    let mut mass = 0.0;
    for k in 0..f.len() {
        let e = (-f[k]).exp();
        w += dv[k] * (sigma * (r[k] + g2[k]) + f[k] - 2.0 * n as f64) * e;
        mass += dv[k] * e;
    }
    WValue::new(c * w, c * mass - 1.0)
}

pub(crate) fn w_u(geo: &Geo, u: &[f64], sigma: f64) -> WValue {
    let n = geo.complex_dim();
    let c = normalization(n, sigma);
    let r = geo.scalar();
    let g2 = geo.grad_norm2(u);
    let dv = geo.dv();
    let mut w = 0.0;
    let mut mass = 0.0;
    for k in 0..u.len() {
        let u2 = u[k] * u[k];
        let log = if u2 > 0.0 { u2 * u2.ln() } else { 0.0 };
        w += dv[k] * (sigma * (4.0 * g2[k] + r[k] * u2) - log - 2.0 * n as f64 * u2);
        mass += dv[k] * u2;
    }
    WValue::new(c * w, c * mass - 1.0)
}

/// `(2 pi sigma)^{-n} int [sigma (R + |grad f|^2) + f - 2n] e^{-f} dV`.
pub fn w_functional(metric: &HermitianMetricField, f: &ScalarField, sigma: f64) -> Result<WValue> {
    let geo = Geo::new(metric)?;
    Ok(w_f(&geo, &f.real_part(), sigma))
}

/// `(2 pi sigma)^{-n} int [sigma (R u^2 + 4 |grad u|^2) - u^2 log u^2 - 2n u^2] dV`.
pub fn w_functional_u(metric: &HermitianMetricField, u: &ScalarField, sigma: f64) -> Result<WValue> {
    let geo = Geo::new(metric)?;
    Ok(w_u(&geo, &u.real_part(), sigma))
}
