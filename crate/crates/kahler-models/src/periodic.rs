//! Seeded trigonometric potentials on periodic charts.

use std::sync::Arc;

use kahler_kernel::{assemble_metric, ChartGrid, HermitianMetricField, PeriodicGrid, PeriodicMetric, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

/// Largest wavenumber per real axis.
const MAX_WAVENUMBER: i32 = 2;

/// `amplitude * sum_m (a_m cos(k_m . x) + b_m sin(k_m . x))`, `a_m, b_m` uniform in `[-1, 1]`,
/// `k_m` integer with entries in `[-2, 2]`. Fails with `NonPositive` if `flat + ddbar phi`
/// is not a metric.
pub fn random_periodic_potential(
    grid: &Arc<PeriodicGrid>,
    seed: u64,
    amplitude: f64,
    modes: usize,
) -> Result<ScalarField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = grid.real_dim();
    let terms: Vec<(Vec<f64>, f64, f64)> = (0..modes)
        .map(|_| {
            let k = loop {
                let k: Vec<i32> = (0..d).map(|_| rng.random_range(-MAX_WAVENUMBER..=MAX_WAVENUMBER)).collect();
                if k.iter().any(|v| *v != 0) {
                    break k;
                }
            };
            let a = rng.random_range(-1.0..=1.0);
            let b = rng.random_range(-1.0..=1.0);
            (k.into_iter().map(f64::from).collect(), a, b)
        })
        .collect();
    let phi: Vec<f64> = (0..grid.len())
        .map(|i| {
            let x = grid.coords(i);
            amplitude
                * terms
                    .iter()
                    .map(|(k, a, b)| {
                        let t: f64 = k.iter().zip(&x).map(|(k, x)| k * x).sum();
                        a * t.cos() + b * t.sin()
                    })
                    .sum::<f64>()
        })
        .collect();
    let cg = ChartGrid::Periodic(grid.clone());
    let field = ScalarField::from_real(&cg, &phi)?;
    assemble_metric(&HermitianMetricField::Periodic(PeriodicMetric::flat(grid.clone())), &field)?;
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::ModelError;
    use kahler_kernel::{identity_residuals, IdentityOptions};

    #[test]
    fn zero_amplitude_is_zero() {
        let g = Arc::new(PeriodicGrid::new(2, 6).unwrap());
        let f = random_periodic_potential(&g, 5, 0.0, 4).unwrap();
        assert!(f.values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn seeded_fields_repeat() {
        let g = Arc::new(PeriodicGrid::new(1, 16).unwrap());
        let a = random_periodic_potential(&g, 11, 0.05, 4).unwrap();
        let b = random_periodic_potential(&g, 11, 0.05, 4).unwrap();
        assert_eq!(a.values, b.values);
        let c = random_periodic_potential(&g, 12, 0.05, 4).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn large_amplitude_leaves_the_cone() {
        let g = Arc::new(PeriodicGrid::new(1, 16).unwrap());
        assert!(matches!(
            random_periodic_potential(&g, 3, 5.0, 4),
            Err(ModelError::NonPositive { .. })
        ));
    }

    #[test]
    fn pipeline_identities_at_reference_resolution() {
        let g = Arc::new(PeriodicGrid::new(1, 64).unwrap());
        let phi = random_periodic_potential(&g, 2024, 0.05, 4).unwrap();
        let flat = HermitianMetricField::Periodic(PeriodicMetric::flat(g));
        let metric = assemble_metric(&flat, &phi).unwrap();
        let rep = identity_residuals(&metric, &IdentityOptions::default()).unwrap();
        for (name, v) in rep.entries() {
            assert!(v < 1e-7, "{name}: {v}");
        }
    }
}
