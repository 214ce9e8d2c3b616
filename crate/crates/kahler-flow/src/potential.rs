//! The normalized flow as `phi_t = log(det(g~ + d dbar phi)/det g~) + f~ + phi + b(t)`.
//!
//! On a radial background with profile `u~` the potential enters through
//! `u = u~ + phi_s`, so `e^beta = e^beta~ + (1 - xi) phi' / (n + 1)`, and the log-det ratio is
//! `psi - psi~` with `psi = rho + (n - 1) beta`.

use std::f64::consts::PI;

use kahler_functionals::ricci_potential;
use kahler_kernel::{HermitianMetricField, KernelError, RadialBackend, RadialGeometry, RadialMetric};

use crate::error::{FlowError, Result};

#[derive(Debug, Clone)]
pub struct PotentialData {
    pub background: RadialMetric,
    /// Normalized Ricci potential of the background.
    pub f_background: Vec<f64>,
    psi_background: Vec<f64>,
    pub phi: Vec<f64>,
    /// Gauge `b(t)` used by the last velocity evaluation.
    pub b: f64,
}

fn psi(geo: &RadialGeometry) -> Vec<f64> {
    let nm1 = (geo.complex_dim() - 1) as f64;
    geo.rho.iter().zip(&geo.beta).map(|(r, b)| r + nm1 * b).collect()
}

impl PotentialData {
    /// Potential representation with `phi = 0` over `background`.
    pub fn new(background: RadialMetric) -> Result<Self> {
        let f_background = ricci_potential(&HermitianMetricField::Radial(background.clone()))?
            .f
            .real_part();
        let geo = background.geometry(RadialBackend::Collocation)?;
        let psi_background = psi(&geo);
        let m = background.grid.len();
        let mut p = PotentialData {
            background,
            f_background,
            psi_background,
            phi: vec![0.0; m],
            b: 0.0,
        };
        p.b = p.velocity_parts(&p.phi)?.1;
        Ok(p)
    }

    pub fn with_phi(&self, phi: Vec<f64>) -> Self {
        PotentialData { phi, ..self.clone() }
    }

    pub(crate) fn beta_of(&self, phi: &[f64]) -> std::result::Result<Vec<f64>, KernelError> {
        let grid = &self.background.grid;
        let dphi = grid.deriv(phi, RadialBackend::Collocation);
        let np1 = grid.class_constant();
        let mut out = Vec::with_capacity(phi.len());
        for (j, ((b, x), d)) in self.background.beta.iter().zip(grid.xi()).zip(&dphi).enumerate() {
            let e = b.exp() + (1.0 - x) * d / np1;
            if !(e > 0.0) {
                return Err(KernelError::NonPositive { node: j, min_eig: e, floor: 0.0 });
            }
            out.push(e.ln());
        }
        Ok(out)
    }

    pub(crate) fn geometry_of(&self, phi: &[f64]) -> std::result::Result<RadialGeometry, KernelError> {
        RadialGeometry::new(self.background.grid.clone(), &self.beta_of(phi)?, RadialBackend::Collocation)
    }

    pub fn metric(&self) -> std::result::Result<RadialMetric, KernelError> {
        RadialMetric::new(self.background.grid.clone(), self.beta_of(&self.phi)?)
    }

    /// `(F, b)` with `phi_t = F + b` and `b` fixing `int e^{-phi_t} dV = (2 pi)^n`.
    pub(crate) fn velocity_parts(&self, phi: &[f64]) -> Result<(Vec<f64>, f64)> {
        let geo = self.geometry_of(phi)?;
        let n = geo.complex_dim() as i32;
        let ps = psi(&geo);
        let f: Vec<f64> = (0..phi.len())
            .map(|j| ps[j] - self.psi_background[j] + self.f_background[j] + phi[j])
            .collect();
        let w = geo.grid.weights();
        let mass: f64 = (0..phi.len()).map(|j| w[j] * geo.vol_density[j] * (-f[j]).exp()).sum();
        let b = (mass / (2.0 * PI).powi(n)).ln();
        if !b.is_finite() {
            return Err(FlowError::GaugeSolveFailed(format!("int e^(-phi_t) dV = {mass:e}")));
        }
        Ok((f, b))
    }

    pub fn velocity(&self, phi: &[f64]) -> Result<Vec<f64>> {
        let (f, b) = self.velocity_parts(phi)?;
        Ok(f.into_iter().map(|v| v + b).collect())
    }

    /// `sup |phi_t - f|` with `f` the normalized Ricci potential of the current metric.
    pub fn gauge_residual(&self) -> Result<f64> {
        let v = self.velocity(&self.phi)?;
        let f = ricci_potential(&HermitianMetricField::Radial(self.metric()?))?.f.real_part();
        Ok(v.iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use kahler_kernel::RadialGrid;
    use std::sync::Arc;

    #[test]
    fn fubini_study_background_is_stationary() {
        for n in 1..=2 {
            let fs = RadialMetric::fubini_study(Arc::new(RadialGrid::new(n, 24).unwrap()));
            let p = PotentialData::new(fs).unwrap();
            assert!(p.b.abs() < 1e-13);
            let v = p.velocity(&p.phi).unwrap();
            // on CP^2 the normalized FS potential is log(9/8): phi moves by a constant only
            let c = if n == 1 { 0.0 } else { (9.0f64 / 8.0).ln() };
            assert!(v.iter().all(|x| (x - c).abs() < 1e-12), "{v:?}");
            assert!(p.gauge_residual().unwrap() < 1e-12);
        }
    }

    #[test]
    fn potential_shifts_the_profile() {
        let grid = Arc::new(RadialGrid::new(1, 32).unwrap());
        let p = PotentialData::new(RadialMetric::fubini_study(grid.clone())).unwrap();
        // phi = eps xi^2 on CP^1: u = u_FS + (q/2) 2 eps xi
        let eps = 0.1;
        let phi: Vec<f64> = grid.xi().iter().map(|x| eps * x * x).collect();
        let beta = p.beta_of(&phi).unwrap();
        for (j, x) in grid.xi().iter().enumerate() {
            // u / u_FS = 1 + (1 - xi) eps xi
            assert!((beta[j] - (1.0 + (1.0 - x) * eps * x).ln()).abs() < 1e-12);
        }
    }
}
