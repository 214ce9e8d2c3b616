use std::sync::Arc;

use kahler_flow::{class_coefficient, integrate, to_krf, to_nkrf, FlowKind, FlowState, RunOptions};
use kahler_kernel::{RadialGrid, RadialMetric};
use kahler_models::bump_profile;
use proptest::prelude::*;

fn bumped(n: usize, eps: f64) -> RadialMetric {
    let p = bump_profile(Arc::new(RadialGrid::new(n, 16).unwrap()), eps).unwrap();
    RadialMetric::new(p.radial_grid(), p.beta()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn normalized_flow_keeps_class_and_volume(n in 1usize..=2, eps in -0.1f64..0.2) {
        let m = bumped(n, eps);
        let c0 = class_coefficient(&m);
        let traj = integrate(FlowState::radial(0.0, FlowKind::Nkrf, m), &RunOptions::new(0.05, 0.2)).unwrap();
        let c1 = class_coefficient(&traj.last().radial_metric().unwrap());
        prop_assert!((c1 - c0).abs() < 1e-9);
        for d in traj.rows() {
            prop_assert!((d.vol / traj.initial.vol - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn unnormalized_class_shrinks_linearly(eps in -0.1f64..0.2, dt in 0.01f64..0.05) {
        let m = bumped(1, eps);
        let c0 = class_coefficient(&m);
        let traj = integrate(FlowState::radial(0.0, FlowKind::Krf, m), &RunOptions::new(dt, 0.3)).unwrap();
        for st in &traj.states {
            let c = class_coefficient(&st.radial_metric().unwrap());
            prop_assert!((c - (c0 - st.t)).abs() < 1e-9);
        }
    }

    #[test]
    fn reparametrization_round_trips(eps in -0.1f64..0.2) {
        let traj = integrate(FlowState::radial(0.0, FlowKind::Nkrf, bumped(1, eps)), &RunOptions::new(0.1, 0.5)).unwrap();
        let back = to_nkrf(&to_krf(&traj, None).unwrap(), None).unwrap();
        for (a, b) in traj.states.iter().zip(&back.states) {
            prop_assert!((a.t - b.t).abs() < 1e-12);
            let (x, y) = (a.radial_metric().unwrap(), b.radial_metric().unwrap());
            prop_assert!(x.beta.iter().zip(&y.beta).all(|(p, q)| (p - q).abs() < 1e-10));
        }
    }
}
