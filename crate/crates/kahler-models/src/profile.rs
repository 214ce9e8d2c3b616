//! U(n)-invariant metrics on CP^n described by the profile `u(s) = phi'(s)`, `s = log|z|^2`.

use std::sync::Arc;

use kahler_kernel::radial::class_tag;
use kahler_kernel::{
    curvature, Closure, ChartGrid, CurvatureOptions, HermitianMetricField, RadialBackend,
    RadialGrid, RadialMetric, ScalarField,
};
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// Relative tolerance on the limits `u(-inf) = 0`, `u(+inf) = n + 1`.
const LIMIT_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub grid: ChartGrid,
    /// `u = phi'(s)` sampled at the radial nodes, from `z = 0` to `z = infinity`.
    pub u: ScalarField,
    pub closure: Closure,
}

/// Plain-data form of a profile for checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub n: usize,
    pub degree: usize,
    pub u: Vec<f64>,
}

impl RadialProfile {
    pub fn new(grid: Arc<RadialGrid>, u: Vec<f64>) -> Result<Self> {
        let closure = grid.closure();
        let cg = ChartGrid::Radial(grid);
        let u = ScalarField::from_real(&cg, &u)?;
        Ok(RadialProfile { grid: cg, u, closure })
    }

    /// Profile of the metric with `u = u_FS e^beta`.
    pub fn from_beta(grid: Arc<RadialGrid>, beta: &[f64]) -> Result<Self> {
        let u = grid.u_fs().iter().zip(beta).map(|(a, b)| a * b.exp()).collect();
        RadialProfile::new(grid, u)
    }

    pub fn fubini_study(grid: Arc<RadialGrid>) -> Self {
        RadialProfile::from_beta(grid.clone(), &vec![0.0; grid.len()]).expect("lengths match")
    }

    pub fn radial_grid(&self) -> Arc<RadialGrid> {
        match &self.grid {
            ChartGrid::Radial(g) => g.clone(),
            ChartGrid::Periodic(_) => unreachable!("profiles live on radial grids"),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        self.u.real_part()
    }

    /// `beta = log(u/u_FS)`; at `z = 0` both vanish and the ratio of slopes is used.
    pub fn beta(&self) -> Vec<f64> {
        let grid = self.radial_grid();
        let u = self.values();
        let ufs = grid.u_fs();
        let mut beta: Vec<f64> = u.iter().zip(&ufs).map(|(a, b)| (a / b).ln()).collect();
        let du = grid.deriv(&u, RadialBackend::Collocation);
        beta[0] = (du[0] / (0.5 * grid.class_constant())).ln();
        beta
    }

    pub fn record(&self) -> ProfileRecord {
        let g = self.radial_grid();
        ProfileRecord {
            n: g.complex_dim(),
            degree: g.degree(),
            u: self.values(),
        }
    }

    pub fn from_record(rec: &ProfileRecord) -> Result<Self> {
        let grid = Arc::new(RadialGrid::new(rec.n, rec.degree)?);
        RadialProfile::new(grid, rec.u.clone())
    }

    /// Checks the limits and range of `u` against the class constant `n + 1`.
    pub fn check_class(&self) -> Result<()> {
        let grid = self.radial_grid();
        let c = grid.class_constant();
        let u = self.values();
        let tol = LIMIT_TOL * c;
        let mismatch = |detail: String| ModelError::ClassMismatch {
            expected: class_tag(grid.complex_dim()),
            detail,
        };
        if !u.iter().all(|v| v.is_finite()) {
            return Err(mismatch("profile has non-finite samples".into()));
        }
        if u[0].abs() > tol {
            return Err(mismatch(format!("u(-inf) = {} instead of 0", u[0])));
        }
        let last = *u.last().unwrap();
        if (last - c).abs() > tol {
            return Err(mismatch(format!("u(+inf) = {last} instead of {c}")));
        }
        if let Some((j, v)) = u.iter().enumerate().find(|(_, v)| **v < -tol || **v > c + tol) {
            return Err(mismatch(format!("u = {v} at node {j} leaves (0, {c})")));
        }
        Ok(())
    }
}

/// Fubini–Study metric on CP^n in the class `pi c_1`, sampled with `resolution + 1` radial nodes.
pub fn fubini_study(n: usize, resolution: usize) -> Result<HermitianMetricField> {
    let grid = Arc::new(RadialGrid::new(n, resolution)?);
    Ok(HermitianMetricField::Radial(RadialMetric::fubini_study(grid)))
}

/// Metric field of a profile, after the class, positivity and backend checks.
pub fn radial_metric(profile: &RadialProfile) -> Result<HermitianMetricField> {
    profile.check_class()?;
    let grid = profile.radial_grid();
    let u = profile.values();
    if let Some(j) = (1..u.len()).find(|&j| u[j] <= u[j - 1]) {
        return Err(ModelError::NonPositive {
            node: j,
            min_eig: u[j] - u[j - 1],
        });
    }
    let metric = RadialMetric::new(grid, profile.beta())?;
    let field = HermitianMetricField::Radial(metric);
    curvature(&field, &CurvatureOptions::default())?;
    Ok(field)
}

/// FS profile plus `eps q^2 (1 + xi)`, which vanishes to second order at infinity.
pub fn bump_profile(grid: Arc<RadialGrid>, eps: f64) -> Result<RadialProfile> {
    let c = 2.0 * eps / grid.class_constant();
    let beta: Vec<f64> = grid
        .xi()
        .iter()
        .map(|x| {
            let q = 1.0 - x * x;
            (1.0 + c * q * q).ln()
        })
        .collect();
    RadialProfile::from_beta(grid, &beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use kahler_kernel::{assemble_metric, CurvatureOptions};
    use std::f64::consts::PI;

    fn geo(field: &HermitianMetricField) -> kahler_kernel::RadialGeometry {
        field.as_radial().unwrap().geometry(RadialBackend::Collocation).unwrap()
    }

    #[test]
    fn fubini_study_cp1_volume_curvature_and_area() {
        let fs = fubini_study(1, 64).unwrap();
        let g = geo(&fs);
        assert!((g.volume() - 2.0 * PI).abs() < 1e-12);
        assert!(g.scalar_curvature().iter().all(|r| (r - 1.0).abs() < 1e-8));
        // ds^2 = 2g doubles area
        assert!((2.0 * g.volume() - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn fubini_study_is_einstein() {
        for n in 1..=2 {
            let pack = curvature(&fubini_study(n, 32).unwrap(), &CurvatureOptions::default()).unwrap();
            assert!(pack.einstein_residual(1.0) < 1e-10);
        }
    }

    #[test]
    fn fs_profile_reproduces_fubini_study() {
        for n in 1..=2 {
            let grid = Arc::new(RadialGrid::new(n, 48).unwrap());
            let m = radial_metric(&RadialProfile::fubini_study(grid)).unwrap();
            let fs = fubini_study(n, 48).unwrap();
            let d = m.as_radial().unwrap().sup_distance(fs.as_radial().unwrap(), RadialBackend::Collocation).unwrap();
            assert!(d < 1e-10, "{d}");
        }
    }

    #[test]
    fn bump_keeps_positivity_and_class() {
        for n in 1..=2 {
            let grid = Arc::new(RadialGrid::new(n, 64).unwrap());
            let p = bump_profile(grid, 0.2).unwrap();
            let m = radial_metric(&p).unwrap();
            let g = geo(&m);
            assert!(g.min_eigenvalue().iter().all(|v| *v > 0.0));
            let fs_vol = if n == 1 { 2.0 * PI } else { 4.5 * PI * PI };
            assert!((g.volume() - fs_vol).abs() < 1e-8, "{}", g.volume());
        }
    }

    #[test]
    fn range_beyond_class_constant_is_rejected() {
        let grid = Arc::new(RadialGrid::new(1, 32).unwrap());
        let u: Vec<f64> = grid.u_fs().iter().map(|u| 1.2 * u).collect();
        let err = radial_metric(&RadialProfile::new(grid.clone(), u).unwrap()).unwrap_err();
        assert!(matches!(err, ModelError::ClassMismatch { .. }));
        // overshoot in the interior with the right limits
        let u: Vec<f64> = grid
            .xi()
            .iter()
            .zip(grid.u_fs())
            .map(|(x, u)| u + 1.5 * (1.0 - x * x))
            .collect();
        let err = radial_metric(&RadialProfile::new(grid, u).unwrap()).unwrap_err();
        assert!(matches!(err, ModelError::ClassMismatch { .. }));
    }

    #[test]
    fn decreasing_profile_is_not_positive() {
        let grid = Arc::new(RadialGrid::new(1, 32).unwrap());
        // stays inside (0, 2) with the right limits, but u' < 0 near xi = -1/2
        let u: Vec<f64> = grid
            .u_fs()
            .iter()
            .map(|t| t + 1.5 / (2.0 * PI) * (2.0 * PI * t).sin())
            .collect();
        let err = radial_metric(&RadialProfile::new(grid, u).unwrap()).unwrap_err();
        assert!(matches!(err, ModelError::NonPositive { .. }), "{err:?}");
    }

    #[test]
    fn radial_potential_matches_symbolic_second_derivative() {
        // phi = eps q on CP^1: phi_s = -eps xi q, phi_ss = -eps q (1 - 3 xi^2) / 2 (sympy)
        let eps = 0.1;
        let fs = fubini_study(1, 48).unwrap();
        let grid = fs.grid();
        let xi: Vec<f64> = grid.weights().iter().enumerate().map(|(j, _)| grid.node(j)[0]).collect();
        let phi: Vec<f64> = xi.iter().map(|x| eps * (1.0 - x * x)).collect();
        let g = assemble_metric(&fs, &ScalarField::from_real(&grid, &phi).unwrap()).unwrap();
        let r = geo(&g);
        for (j, x) in xi.iter().enumerate() {
            let q = 1.0 - x * x;
            let u = 1.0 + x - eps * x * q;
            let w = 0.5 * q - 0.5 * eps * q * (1.0 - 3.0 * x * x);
            let u_num = (1.0 + x) * r.beta[j].exp();
            let w_num = 0.5 * q * r.rho[j].exp();
            assert!((u_num - u).abs() < 1e-8, "u at {j}");
            assert!((w_num - w).abs() < 1e-8, "w at {j}");
        }
    }

    #[test]
    fn record_round_trip() {
        let grid = Arc::new(RadialGrid::new(2, 16).unwrap());
        let p = bump_profile(grid, 0.1).unwrap();
        let rec = p.record();
        let json = serde_json::to_string(&rec).unwrap();
        let back = RadialProfile::from_record(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back.values(), p.values());
    }
}
