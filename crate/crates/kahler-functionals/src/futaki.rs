//! The Futaki invariant `F(V) = int V(f) omega^[n]` for polynomial vector fields.

use std::f64::consts::PI;

use kahler_kernel::{HermitianMetricField, RadialBackend};
use num_complex::Complex64 as C64;

use crate::error::{FunctionalError, Result};
use crate::potential::{radial_dv, ricci_potential};

/// Largest admissible holomorphy residual.
pub const HOLOMORPHY_TOL: f64 = 1e-12;

/// `V = sum_{j,k} c_{jk} z^j zbar^k d/dz` on CP^1, or `b z^i d/dz^i` (scaling) on CP^2.
#[derive(Debug, Clone, PartialEq)]
pub struct HolomorphicField {
    pub n: usize,
    /// `(j, k, c_{jk})`.
    pub terms: Vec<(u32, u32, C64)>,
}

impl HolomorphicField {
    /// `(a + b z + c z^2) d/dz` on CP^1.
    pub fn quadratic(a: C64, b: C64, c: C64) -> Self {
        HolomorphicField {
            n: 1,
            terms: vec![(0, 0, a), (1, 0, b), (2, 0, c)],
        }
    }

    /// `b sum_i z^i d/dz^i`.
    pub fn scaling(n: usize, b: C64) -> Self {
        HolomorphicField { n, terms: vec![(1, 0, b)] }
    }

    /// `sup |dbar V|` sampled on rings about the origin, plus the coefficients of
    /// terms of degree above two, which blow up at infinity.
    pub fn holomorphy_residual(&self) -> f64 {
        let mut sup = 0.0f64;
        for ring in [0.25, 0.5, 1.0, 2.0] {
            for m in 0..16 {
                let z = C64::from_polar(ring, 2.0 * PI * m as f64 / 16.0);
                let dbar: C64 = self
                    .terms
                    .iter()
                    .filter(|(_, k, _)| *k > 0)
                    .map(|(j, k, c)| c * z.powu(*j) * z.conj().powu(k - 1) * *k as f64)
                    .sum();
                sup = sup.max(dbar.norm());
            }
        }
        let at_infinity: f64 = self
            .terms
            .iter()
            .filter(|(j, k, _)| j + k > 2)
            .map(|(_, _, c)| c.norm())
            .sum();
        sup + at_infinity
    }

    /// Coefficient of the Euler field `z d/dz`, the only part that pairs with radial functions.
    fn euler_coefficient(&self) -> C64 {
        self.terms
            .iter()
            .filter(|(j, k, _)| *j == 1 && *k == 0)
            .map(|t| t.2)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FutakiValue {
    pub value: C64,
    /// `|F|` computed with `f + 1` in place of `f`; zero because `V(1) = 0`, recorded
    /// as a check on the quadrature.
    pub normalization_sensitivity: f64,
}

pub fn futaki(metric: &HermitianMetricField, v: &HolomorphicField) -> Result<FutakiValue> {
    let residual = v.holomorphy_residual();
    if residual > HOLOMORPHY_TOL {
        return Err(FunctionalError::NotHolomorphic { residual });
    }
    let m = metric
        .as_radial()
        .ok_or_else(|| FunctionalError::Unsupported("Futaki invariant is defined on CP^n profiles".into()))?;
    if v.n != m.grid.complex_dim() || (v.n == 2 && v.terms.iter().any(|(j, k, c)| (*j, *k) != (1, 0) && c.norm() > 0.0)) {
        return Err(FunctionalError::Unsupported(
            "on CP^2 only the scaling field is built in".into(),
        ));
    }
    let geo = m.geometry(RadialBackend::Collocation)?;
    let f = ricci_potential(metric)?.f.real_part();
    let dv = radial_dv(&geo);
    // V(f) = (a/z + b + c z) f_s for radial f; the a and c parts integrate to zero over circles
    let fs = geo.radial_derivative(&f);
    let integral: f64 = dv.iter().zip(&fs).map(|(w, d)| w * d).sum();
    let shifted: Vec<f64> = f.iter().map(|x| x + 1.0).collect();
    let fs1 = geo.radial_derivative(&shifted);
    let integral1: f64 = dv.iter().zip(&fs1).map(|(w, d)| w * d).sum();
    let b = v.euler_coefficient();
    Ok(FutakiValue {
        value: b * integral,
        normalization_sensitivity: (b * (integral1 - integral)).norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use kahler_kernel::RadialGrid;
    use kahler_models::{bump_profile, fubini_study, radial_metric};
    use std::sync::Arc;

    fn v() -> HolomorphicField {
        HolomorphicField::quadratic(C64::new(0.3, -1.0), C64::new(1.0, 0.5), C64::new(-0.2, 0.0))
    }

    #[test]
    fn kahler_einstein_gives_zero() {
        let fs = fubini_study(1, 32).unwrap();
        assert!(futaki(&fs, &v()).unwrap().value.norm() < 1e-12);
        let fs2 = fubini_study(2, 32).unwrap();
        assert!(futaki(&fs2, &HolomorphicField::scaling(2, C64::new(1.0, 0.0))).unwrap().value.norm() < 1e-12);
    }

    #[test]
    fn class_invariance_on_cp1() {
        let grid = Arc::new(RadialGrid::new(1, 64).unwrap());
        let bumped = radial_metric(&bump_profile(grid, 0.25).unwrap()).unwrap();
        let a = futaki(&fubini_study(1, 64).unwrap(), &v()).unwrap();
        let b = futaki(&bumped, &v()).unwrap();
        assert!((a.value - b.value).norm() < 1e-5);
        assert!(b.value.norm() < 1e-5);
        assert!(b.normalization_sensitivity < 1e-10);
    }

    #[test]
    fn non_holomorphic_fields_are_rejected() {
        let fs = fubini_study(1, 16).unwrap();
        let zbar = HolomorphicField { n: 1, terms: vec![(0, 1, C64::new(1.0, 0.0))] };
        assert!(matches!(futaki(&fs, &zbar), Err(FunctionalError::NotHolomorphic { .. })));
        let cubic = HolomorphicField { n: 1, terms: vec![(3, 0, C64::new(1.0, 0.0))] };
        assert!(matches!(futaki(&fs, &cubic), Err(FunctionalError::NotHolomorphic { .. })));
    }
}
