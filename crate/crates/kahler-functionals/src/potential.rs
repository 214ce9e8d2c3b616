//! Ricci potential `g - Rc = d dbar f`, normalized by `int e^{-f} dV = (2 pi)^n`, and `a(t)`.

use std::f64::consts::PI;

use kahler_kernel::{ChartGrid, HermitianMetricField, RadialBackend, RadialGeometry, ScalarField};
use nalgebra::{DMatrix, DVector};

use crate::error::{FunctionalError, Result};

/// Largest admissible `|Delta f - (n - R)|` after the solve.
const POISSON_TOL: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct RicciPotential {
    pub f: ScalarField,
    /// `sup |Delta f - (n - R)|`.
    pub poisson_residual: f64,
    /// `sup |d dbar f - (g - Rc)|` in the orthonormal frame.
    pub ddbar_residual: f64,
    /// Additive constant fixed by the normalization (`f` has it added).
    pub normalization_constant: f64,
}

/// Zero-mean solution of `Delta f = n - R` on a radial profile, by collocation with
/// the constant mode bordered out.
pub fn solve_zero_mean(geo: &RadialGeometry, rhs: &[f64], dv: &[f64]) -> Result<Vec<f64>> {
    let m = rhs.len();
    let lap = geo.laplacian_matrix();
    let mut a = DMatrix::<f64>::zeros(m + 1, m + 1);
    for j in 0..m {
        for k in 0..m {
            a[(j, k)] = lap[j * m + k];
        }
        a[(j, m)] = 1.0;
        a[(m, j)] = dv[j];
    }
    let mut b = DVector::<f64>::zeros(m + 1);
    for j in 0..m {
        b[j] = rhs[j];
    }
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| FunctionalError::PoissonFailed("bordered collocation system is singular".into()))?;
    Ok(x.iter().take(m).copied().collect())
}

pub(crate) fn radial_dv(geo: &RadialGeometry) -> Vec<f64> {
    geo.grid.weights().iter().zip(&geo.vol_density).map(|(w, v)| w * v).collect()
}

pub fn ricci_potential(metric: &HermitianMetricField) -> Result<RicciPotential> {
    let m = metric.as_radial().ok_or_else(|| {
        FunctionalError::Unsupported("the Ricci potential needs a metric in pi c_1(CP^n)".into())
    })?;
    let geo = m.geometry(RadialBackend::Collocation)?;
    let n = geo.complex_dim() as f64;
    let r = geo.scalar_curvature();
    let rhs: Vec<f64> = r.iter().map(|v| n - v).collect();
    let dv = radial_dv(&geo);
    let mut f = solve_zero_mean(&geo, &rhs, &dv)?;
    let mass: f64 = dv.iter().zip(&f).map(|(w, v)| w * (-v).exp()).sum();
    let c = (mass / (2.0 * PI).powi(n as i32)).ln();
    if !c.is_finite() {
        return Err(FunctionalError::NormalizationFailed(format!("int e^(-f) dV = {mass}")));
    }
    for v in f.iter_mut() {
        *v += c;
    }
    let lap = geo.laplacian(&f);
    let poisson_residual = lap.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if !(poisson_residual < POISSON_TOL) {
        return Err(FunctionalError::PoissonFailed(format!(
            "residual {poisson_residual:e}; the class constraint int (n - R) dV = 0 may fail"
        )));
    }
    let (ric_r, ric_t) = geo.ricci();
    let (hr, ht) = geo.ddbar(&f);
    let mut ddbar_residual = 0.0f64;
    for j in 0..f.len() {
        ddbar_residual = ddbar_residual.max((hr[j] - (1.0 - ric_r[j])).abs());
        if geo.complex_dim() > 1 {
            ddbar_residual = ddbar_residual.max((ht[j] - (1.0 - ric_t[j])).abs());
        }
    }
    Ok(RicciPotential {
        f: ScalarField::from_real(&ChartGrid::Radial(m.grid.clone()), &f)?,
        poisson_residual,
        ddbar_residual,
        normalization_constant: c,
    })
}

/// `a = (2 pi)^{-n} int f e^{-f} dV`.
pub fn a_coefficient(metric: &HermitianMetricField, f: &ScalarField) -> Result<f64> {
    let geo = crate::geo::Geo::new(metric)?;
    let n = geo.complex_dim() as i32;
    let fv = f.real_part();
    let g: Vec<f64> = fv.iter().map(|v| v * (-v).exp()).collect();
    Ok(geo.integrate(&g) / (2.0 * PI).powi(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use kahler_kernel::RadialGrid;
    use kahler_models::{bump_profile, fubini_study, radial_metric};
    use std::sync::Arc;

    #[test]
    fn fubini_study_potentials() {
        let p1 = ricci_potential(&fubini_study(1, 32).unwrap()).unwrap();
        assert!(p1.f.real_part().iter().all(|v| v.abs() < 1e-12));
        let fs2 = fubini_study(2, 32).unwrap();
        let p2 = ricci_potential(&fs2).unwrap();
        assert!(p2.f.real_part().iter().all(|v| (v - (9.0f64 / 8.0).ln()).abs() < 1e-12));
        assert!(a_coefficient(&fubini_study(1, 32).unwrap(), &p1.f).unwrap().abs() < 1e-12);
    }

    #[test]
    fn perturbed_residuals() {
        for n in 1..=2 {
            let grid = Arc::new(RadialGrid::new(n, 64).unwrap());
            let metric = radial_metric(&bump_profile(grid, 0.2).unwrap()).unwrap();
            let p = ricci_potential(&metric).unwrap();
            assert!(p.poisson_residual < 1e-7, "{}", p.poisson_residual);
            assert!(p.ddbar_residual < 1e-7, "{}", p.ddbar_residual);
            let geo = metric.as_radial().unwrap().geometry(RadialBackend::Collocation).unwrap();
            let mass = geo.integrate(&p.f.real_part().iter().map(|v| (-v).exp()).collect::<Vec<_>>());
            assert!((mass - (2.0 * PI).powi(n as i32)).abs() < 1e-10);
            assert!(p.f.real_part().iter().any(|v| v.abs() > 1e-3));
        }
    }

    #[test]
    fn scaled_metric_leaves_the_class() {
        let fs = fubini_study(1, 32).unwrap();
        let bad = HermitianMetricField::Radial(fs.as_radial().unwrap().scaled(1.5));
        assert!(matches!(ricci_potential(&bad), Err(FunctionalError::PoissonFailed(_))));
    }
}
