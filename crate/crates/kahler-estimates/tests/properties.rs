use std::sync::Arc;

use kahler_estimates::{ball_ratio, block_margin, heat_kernel_residual, trace_inequality, TraceFamily, MARGIN_TOL};
use kahler_kernel::{HermitianMetricField, RadialGrid, RadialMetric};
use kahler_models::{bump_profile, Pole};
use proptest::prelude::*;

proptest! {
    #[test]
    fn heat_kernel_identity_is_exact(x in prop::collection::vec(-3.0f64..3.0, 1..=3), t in 0.05f64..4.0) {
        let (m, tr) = heat_kernel_residual(&x, t);
        prop_assert!(m < 1e-12 && tr < 1e-12, "{m:e} {tr:e}");
    }

    #[test]
    fn symmetric_coupling_obeys_the_trace_bound(seed in any::<u64>(), m in 1usize..=6) {
        let r = trace_inequality(50, seed, m, TraceFamily::RealSymmetric).unwrap();
        prop_assert!(r.worst_margin >= -MARGIN_TOL);
    }

    #[test]
    fn uncoupled_blocks_have_nonnegative_margin(a in prop::collection::vec(-1.0f64..1.0, 4), c in prop::collection::vec(-1.0f64..1.0, 4)) {
        // A = a a^T and C = c c^T in 2x2 blocks, B = 0
        let mut g = vec![0.0; 16];
        for i in 0..2 {
            for j in 0..2 {
                g[i * 4 + j] = a[i] * a[j] + a[i + 2] * a[j + 2];
                g[(i + 2) * 4 + j + 2] = c[i] * c[j] + c[i + 2] * c[j + 2];
            }
        }
        prop_assert!(block_margin(&g, 2) >= -1e-15);
    }

    #[test]
    fn ball_ratios_are_dilation_invariant(eps in -0.1f64..0.2, a in 0.2f64..5.0, r in 0.05f64..1.0) {
        let p = bump_profile(Arc::new(RadialGrid::new(1, 24).unwrap()), eps).unwrap();
        let m = RadialMetric::new(p.radial_grid(), p.beta()).unwrap();
        let x = ball_ratio(&HermitianMetricField::Radial(m.clone()), Pole::Origin, r).unwrap();
        let y = ball_ratio(&HermitianMetricField::Radial(m.scaled(a)), Pole::Origin, r * a.sqrt()).unwrap();
        prop_assert!((x - y).abs() < 1e-10 * x);
    }
}
