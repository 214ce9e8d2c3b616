//! Trajectory driver: macro steps of the requested size, each split into substeps that
//! respect the step bound, with diagnostics recorded at every macro step.

use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::state::{diagnose, FlowKind, FlowState, Halt, IntegratorMeta, Trajectory};
use crate::step::{advance, class_coefficient, step_bound, StepOptions, SINGULAR_CLASS_FLOOR, SINGULAR_CURVATURE_CEILING};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Macro step: spacing of stored states and diagnostics rows.
    pub dt: f64,
    pub t_end: f64,
    pub step: StepOptions,
    /// Substep halvings allowed per macro step after a failed substep.
    pub max_rejections: usize,
}

impl RunOptions {
    pub fn new(dt: f64, t_end: f64) -> Self {
        RunOptions {
            dt,
            t_end,
            step: StepOptions::default(),
            max_rejections: 4,
        }
    }
}

/// Advances `state` to `t_target` in `substeps` equal pieces.
fn macro_step(state: &FlowState, t_target: f64, substeps: usize, opts: &StepOptions) -> Result<FlowState> {
    let h = (t_target - state.t) / substeps as f64;
    let mut s = state.clone();
    for k in 0..substeps {
        s = advance(&s, h, opts.scheme)?;
        if k + 1 == substeps {
            s.t = t_target;
        }
    }
    Ok(s)
}

/// Integrates from `initial` through the listed output times.
pub fn integrate_to(initial: FlowState, times: &[f64], step: &StepOptions, max_rejections: usize) -> Result<Trajectory> {
    let kind = initial.kind();
    if initial.radial_metric().is_err() {
        return Err(FlowError::Unsupported("flows are integrated on radial profiles".into()));
    }
    let initial_diag = diagnose(&initial, 0.0, 0)?;
    let mut traj = Trajectory {
        kind,
        initial: initial_diag,
        states: vec![initial],
        diagnostics: Vec::new(),
        meta: IntegratorMeta {
            scheme: step.scheme,
            dt_history: Vec::new(),
            substeps: Vec::new(),
            rejections: 0,
        },
        halt: None,
    };
    for &t_next in times {
        let cur = traj.last().clone();
        if !(t_next > cur.t) {
            return Err(FlowError::Unsupported(format!("output time {t_next} does not follow {}", cur.t)));
        }
        let dt = t_next - cur.t;
        let bound = step_bound(&cur, step)?;
        if kind == FlowKind::Krf {
            let c = class_coefficient(&cur.radial_metric()?) - dt;
            if c < SINGULAR_CLASS_FLOOR || bound.k_max > SINGULAR_CURVATURE_CEILING {
                traj.halt = Some(Halt::SingularTime {
                    s: cur.t,
                    class_coefficient: c + dt,
                    curvature: bound.k_max,
                });
                break;
            }
        }
        let mut substeps = (dt / bound.dt(step)).ceil().max(1.0) as usize;
        let mut attempts = 0;
        let next = loop {
            match macro_step(&cur, t_next, substeps, step) {
                Ok(s) => break s,
                Err(e @ (FlowError::NonPositive { .. } | FlowError::GaugeSolveFailed(_))) => {
                    if attempts == max_rejections {
                        return Err(e);
                    }
                    attempts += 1;
                    traj.meta.rejections += 1;
                    substeps *= 2;
                }
                Err(e) => return Err(e),
            }
        };
        traj.diagnostics.push(diagnose(&next, dt, substeps)?);
        traj.meta.dt_history.push(dt);
        traj.meta.substeps.push(substeps);
        traj.states.push(next);
    }
    Ok(traj)
}

/// Integrates to `t_end` with macro step `dt` (the last step may be shorter).
pub fn integrate(initial: FlowState, opts: &RunOptions) -> Result<Trajectory> {
    if !(opts.dt > 0.0) || !(opts.t_end > initial.t) {
        return Err(FlowError::Unsupported(format!("dt = {} and t_end = {} are not a valid window", opts.dt, opts.t_end)));
    }
    let t0 = initial.t;
    let steps = ((opts.t_end - t0) / opts.dt - 1e-9).ceil() as usize;
    let times: Vec<f64> = (1..=steps).map(|k| (t0 + k as f64 * opts.dt).min(opts.t_end)).collect();
    integrate_to(initial, &times, &opts.step, opts.max_rejections)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialData;
    use crate::state::Representation;
    use kahler_kernel::{RadialBackend, RadialGrid, RadialMetric};
    use kahler_models::bump_profile;
    use std::sync::Arc;

    fn bumped(n: usize, degree: usize, eps: f64) -> RadialMetric {
        let p = bump_profile(Arc::new(RadialGrid::new(n, degree).unwrap()), eps).unwrap();
        RadialMetric::new(p.radial_grid(), p.beta()).unwrap()
    }

    #[test]
    fn rows_match_steps_and_times_increase() {
        let traj = integrate(FlowState::radial(0.0, FlowKind::Nkrf, bumped(1, 24, 0.2)), &RunOptions::new(0.05, 0.32)).unwrap();
        assert_eq!(traj.diagnostics.len(), traj.states.len() - 1);
        assert_eq!(traj.diagnostics.len(), 7);
        assert!((traj.last().t - 0.32).abs() < 1e-15);
        assert!(traj.states.windows(2).all(|w| w[1].t > w[0].t));
        for d in traj.rows() {
            assert!((d.vol - traj.initial.vol).abs() < 1e-9 * d.vol);
            assert!((d.r_avg - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn krf_from_fubini_study_halts_before_the_singular_time() {
        let fs = RadialMetric::fubini_study(Arc::new(RadialGrid::new(1, 16).unwrap()));
        let traj = integrate(FlowState::radial(0.0, FlowKind::Krf, fs), &RunOptions::new(0.01, 1.0)).unwrap();
        assert!(matches!(traj.halt, Some(Halt::SingularTime { .. })));
        let s = traj.last().t;
        assert!(s > 0.98 && s < 1.0 - 1e-3, "{s}");
        let c = crate::step::class_coefficient(&traj.last().radial_metric().unwrap());
        assert!((c / (1.0 - s) - 1.0).abs() < 1e-6, "{c} vs {}", 1.0 - s);
    }

    #[test]
    fn potential_flow_matches_tensor_flow() {
        let m = bumped(1, 32, 0.2);
        let opts = RunOptions::new(0.05, 0.5);
        let tensor = integrate(FlowState::radial(0.0, FlowKind::Nkrf, m.clone()), &opts).unwrap();
        let p = PotentialData::new(m).unwrap();
        let pot = integrate(
            FlowState { t: 0.0, lambda: 1.0, repr: Representation::Potential(p) },
            &opts,
        )
        .unwrap();
        let a = tensor.last().radial_metric().unwrap();
        let b = pot.last().radial_metric().unwrap();
        let d = a.sup_distance(&b, RadialBackend::Collocation).unwrap();
        assert!(d < 1e-8, "{d}");
        assert!(pot.diagnostics.iter().all(|r| r.gauge_residual.unwrap() < 1e-7));
    }
}
