use std::f64::consts::PI;
use std::sync::Arc;

use kahler_kernel::{RadialBackend, RadialGrid};
use kahler_models::{geodesic_table, radial_metric, Pole, RadialProfile};
use proptest::prelude::*;

/// `beta = log(1 + a q^2 + b xi q^2)`: class-preserving and smooth at both poles.
fn profile(n: usize, a: f64, b: f64) -> RadialProfile {
    let grid = Arc::new(RadialGrid::new(n, 64).unwrap());
    let beta: Vec<f64> = grid
        .xi()
        .iter()
        .map(|x| {
            let q2 = (1.0 - x * x).powi(2);
            (1.0 + a * q2 + b * x * q2).ln()
        })
        .collect();
    RadialProfile::from_beta(grid, &beta).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn volume_is_a_class_invariant(n in 1usize..=2, a in -0.1f64..0.1, b in -0.1f64..0.1) {
        let m = radial_metric(&profile(n, a, b)).unwrap();
        let vol = m.as_radial().unwrap().geometry(RadialBackend::Collocation).unwrap().volume();
        let fs = if n == 1 { 2.0 * PI } else { 4.5 * PI * PI };
        prop_assert!((vol - fs).abs() < 1e-8);
    }

    #[test]
    fn balls_grow_and_exhaust(n in 1usize..=2, a in -0.1f64..0.1, b in -0.1f64..0.1, r in 0.0f64..1.0) {
        let m = radial_metric(&profile(n, a, b)).unwrap();
        let t = geodesic_table(&m, Pole::Origin).unwrap();
        prop_assert!(t.is_monotone());
        prop_assert!((t.volume(t.diameter) - t.total_volume).abs() < 1e-6 * t.total_volume);
        let r1 = r * t.diameter;
        let r2 = (r1 + 0.05).min(t.diameter);
        prop_assert!(t.annulus(r1, r2) >= 0.0);
    }
}
