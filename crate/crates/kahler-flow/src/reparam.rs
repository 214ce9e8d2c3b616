//! `g^(s) = (1 - s) g(t)` with `t = -log(1 - s)` between the normalized and the unnormalized flow.

use kahler_kernel::RadialMetric;

use crate::error::{FlowError, Result};
use crate::state::{FlowKind, FlowState, Representation, Trajectory};

const WINDOW_SLACK: f64 = 1e-12;

fn shifted(metric: &RadialMetric, log_factor: f64) -> RadialMetric {
    RadialMetric {
        beta: metric.beta.iter().map(|b| b + log_factor).collect(),
        ..metric.clone()
    }
}

fn rebuild(src: &Trajectory, kind: FlowKind, states: Vec<FlowState>) -> Result<Trajectory> {
    let mut out = Trajectory::from_states(kind, states, src.meta.scheme)?;
    out.meta.rejections = src.meta.rejections;
    Ok(out)
}

/// Unnormalized trajectory on `s <= s_max` (all states if `None`).
pub fn to_krf(traj: &Trajectory, s_max: Option<f64>) -> Result<Trajectory> {
    if traj.kind == FlowKind::Krf {
        return Err(FlowError::Unsupported("trajectory is already unnormalized".into()));
    }
    let available = 1.0 - (-traj.last().t).exp();
    let s_max = s_max.unwrap_or(available);
    if s_max > available + WINDOW_SLACK {
        return Err(FlowError::WindowExceeded { requested: s_max, available });
    }
    let mut states = Vec::new();
    for st in &traj.states {
        let s = -(-st.t).exp_m1();
        if s > s_max + WINDOW_SLACK {
            break;
        }
        let m = st.radial_metric()?;
        states.push(FlowState::radial(s, FlowKind::Krf, shifted(&m, -st.t)));
    }
    rebuild(traj, FlowKind::Krf, states)
}

/// Normalized trajectory on `t <= t_max` from an unnormalized one.
pub fn to_nkrf(traj: &Trajectory, t_max: Option<f64>) -> Result<Trajectory> {
    if traj.kind != FlowKind::Krf {
        return Err(FlowError::Unsupported("trajectory is already normalized".into()));
    }
    let s_last = traj.last().t;
    if !(s_last < 1.0) {
        return Err(FlowError::WindowExceeded { requested: s_last, available: 1.0 });
    }
    let available = -(-s_last).ln_1p();
    let t_max = t_max.unwrap_or(available);
    if t_max > available + WINDOW_SLACK {
        return Err(FlowError::WindowExceeded { requested: t_max, available });
    }
    let mut states = Vec::new();
    for st in &traj.states {
        let t = -(-st.t).ln_1p();
        if t > t_max + WINDOW_SLACK {
            break;
        }
        let m = match &st.repr {
            Representation::Metric(_) => st.radial_metric()?,
            Representation::Potential(_) => unreachable!("potential states are normalized"),
        };
        states.push(FlowState::radial(t, FlowKind::Nkrf, shifted(&m, t)));
    }
    rebuild(traj, FlowKind::Nkrf, states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::{integrate, RunOptions};
    use kahler_kernel::RadialGrid;
    use kahler_models::bump_profile;
    use std::sync::Arc;

    fn nkrf_run() -> Trajectory {
        let p = bump_profile(Arc::new(RadialGrid::new(1, 24).unwrap()), 0.2).unwrap();
        let m = RadialMetric::new(p.radial_grid(), p.beta()).unwrap();
        integrate(FlowState::radial(0.0, FlowKind::Nkrf, m), &RunOptions::new(0.1, 1.0)).unwrap()
    }

    #[test]
    fn endpoints_and_scalar_relation() {
        let nk = nkrf_run();
        let k = to_krf(&nk, None).unwrap();
        assert_eq!(k.states[0].t, 0.0);
        assert!((k.last().t - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        let b0 = &k.states[0].radial_metric().unwrap().beta;
        assert_eq!(b0, &nk.states[0].radial_metric().unwrap().beta);
        for (a, b) in nk.rows().zip(k.rows()) {
            // (1 - s) R^ = R
            let f = 1.0 - b.t;
            assert!((f * b.r_max - a.r_max).abs() < 1e-8 && (f * b.r_min - a.r_min).abs() < 1e-8);
            assert!((f * b.rm_max - a.rm_max).abs() < 1e-8);
        }
    }

    #[test]
    fn round_trip() {
        let nk = nkrf_run();
        let back = to_nkrf(&to_krf(&nk, None).unwrap(), None).unwrap();
        assert_eq!(back.states.len(), nk.states.len());
        for (a, b) in nk.states.iter().zip(&back.states) {
            assert!((a.t - b.t).abs() < 1e-12);
            let (x, y) = (a.radial_metric().unwrap().beta, b.radial_metric().unwrap().beta);
            assert!(x.iter().zip(&y).all(|(p, q)| (p - q).abs() < 1e-9));
        }
    }

    #[test]
    fn window_is_checked() {
        let nk = nkrf_run();
        assert!(matches!(to_krf(&nk, Some(0.9)), Err(FlowError::WindowExceeded { .. })));
        assert_eq!(to_krf(&nk, Some(0.5)).unwrap().states.len(), 7);
    }
}
