//! Type I / Type II diagnosis of the unnormalized flow near its singular time, and
//! parabolic blow-up about a curvature pick.

use kahler_kernel::{curvature, CurvatureOptions, HermitianMetricField};
use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::state::{FlowKind, FlowState, Trajectory};
use crate::step::class_coefficient;

/// Least window `s_end / T` for a classification.
const MIN_WINDOW: f64 = 0.5;
const MIN_STATES: usize = 5;
/// Growth exponent of `(T - s) K^_max` against `log(1/(T - s))` separating the classes.
const TYPE_I_EXPONENT: f64 = 0.05;
const TYPE_II_EXPONENT: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TypeClass {
    TypeI,
    TypeIISuspected,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeReport {
    /// Singular time `T = s + c(s)` of the class.
    pub singular_time: f64,
    /// `(s, (T - s) K^_max(s))`.
    pub products: Vec<(f64, f64)>,
    pub sup_product: f64,
    /// Least-squares slope of `log((T - s) K^_max)` against `log(1/(T - s))` over the later half.
    pub growth_exponent: f64,
    pub classification: TypeClass,
    /// Times at which the sup is attained, in `s` and in normalized time `t = -log(1 - s/T)`.
    pub witness_s: f64,
    pub witness_t: f64,
    /// Normalized-flow `K_max(t)`; equal to the products by `(1 - s)|Rm^| = |Rm|`.
    pub nkrf_k_max: Vec<(f64, f64)>,
}

fn singular_time(traj: &Trajectory) -> Result<f64> {
    let s0 = &traj.states[0];
    Ok(s0.t + class_coefficient(&s0.radial_metric()?))
}

pub fn classify_type(traj: &Trajectory) -> Result<TypeReport> {
    if traj.kind != FlowKind::Krf {
        return Err(FlowError::Unsupported("classification runs on the unnormalized flow".into()));
    }
    if traj.states.len() < MIN_STATES {
        return Err(FlowError::Inconclusive(format!("{} states are too few", traj.states.len())));
    }
    if traj.rows().all(|d| !(d.rm_max > 0.0)) {
        return Err(FlowError::Inconclusive("curvature vanishes: no singularity forms".into()));
    }
    let big_t = singular_time(traj)?;
    let products: Vec<(f64, f64)> = traj.rows().map(|d| (d.t, (big_t - d.t) * d.rm_max)).collect();
    let (witness_s, sup_product) = products
        .iter()
        .copied()
        .fold((products[0].0, products[0].1), |b, p| if p.1 > b.1 * (1.0 + 1e-12) { p } else { b });
    let s_end = traj.last().t;
    if s_end < MIN_WINDOW * big_t {
        return Err(FlowError::Inconclusive(format!("window ends at s = {s_end}, singular time {big_t}")));
    }
    let late: Vec<(f64, f64)> = products
        .iter()
        .filter(|(s, _)| *s >= 0.5 * s_end)
        .map(|(s, p)| ((1.0 / (big_t - s)).ln(), p.ln()))
        .collect();
    let growth_exponent = if late.len() < 2 {
        0.0
    } else {
        let k = late.len() as f64;
        let mx = late.iter().map(|p| p.0).sum::<f64>() / k;
        let my = late.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = late.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = late.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
        if sxx > 0.0 {
            sxy / sxx
        } else {
            0.0
        }
    };
    let classification = if growth_exponent < TYPE_I_EXPONENT {
        TypeClass::TypeI
    } else if growth_exponent > TYPE_II_EXPONENT {
        TypeClass::TypeIISuspected
    } else {
        TypeClass::Inconclusive
    };
    let to_t = |s: f64| -(-s / big_t).ln_1p();
    Ok(TypeReport {
        singular_time: big_t,
        nkrf_k_max: products.iter().map(|(s, p)| (to_t(*s), *p)).collect(),
        products,
        sup_product,
        growth_exponent,
        classification,
        witness_s,
        witness_t: to_t(witness_s),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PickRule {
    /// Maximize `(T - s)|Rm^|`.
    TypeI,
    /// Maximize `(horizon - s)|Rm^|` over `s < horizon`.
    TypeII { horizon: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pick {
    pub state_index: usize,
    pub node: usize,
    pub s: f64,
    /// `Q = |Rm^|` at the pick.
    pub q: f64,
}

#[derive(Debug, Clone)]
pub struct Blowup {
    pub pick: Pick,
    /// `Q g^(s_k + t^/Q)` at the stored times, in rescaled time `t^`.
    pub trajectory: Trajectory,
    /// `sup (T - s)|Rm^|`, the Type I constant of the window.
    pub omega: f64,
    /// `(t^, K_max(t^) (omega - t^)/(omega + eps))` for `t^ >= 0`, Type I rule only.
    pub bound_ratio: Vec<(f64, f64)>,
}

impl Blowup {
    pub fn max_bound_ratio(&self) -> f64 {
        self.bound_ratio.iter().map(|p| p.1).fold(0.0, f64::max)
    }
}

/// Rescales about the pick; ties go to the earliest time, then the smallest node index.
pub fn blowup_rescale(traj: &Trajectory, rule: PickRule, threshold: f64, eps: f64) -> Result<Blowup> {
    if traj.kind != FlowKind::Krf {
        return Err(FlowError::Unsupported("blow-up runs on the unnormalized flow".into()));
    }
    let big_t = singular_time(traj)?;
    let mut rm: Vec<Vec<f64>> = Vec::with_capacity(traj.states.len());
    for s in &traj.states {
        let pack = curvature(&s.metric()?, &CurvatureOptions::unchecked()).map_err(|e| FlowError::at(s.t, e))?;
        rm.push(pack.rm_norm2.iter().map(|v| v.sqrt()).collect());
    }
    let peak = rm.iter().flatten().copied().fold(0.0, f64::max);
    if !(peak > threshold) {
        return Err(FlowError::NoPick { threshold, max: peak });
    }
    let mut best: Option<(f64, Pick)> = None;
    let mut omega = 0.0f64;
    for (k, st) in traj.states.iter().enumerate() {
        let weight = match rule {
            PickRule::TypeI => big_t - st.t,
            PickRule::TypeII { horizon } => horizon - st.t,
        };
        for (node, &r) in rm[k].iter().enumerate() {
            omega = omega.max((big_t - st.t) * r);
            if weight <= 0.0 || r <= threshold {
                continue;
            }
            let v = weight * r;
            if best.map_or(true, |(b, _)| v > b * (1.0 + 1e-12)) {
                best = Some((v, Pick { state_index: k, node, s: st.t, q: r }));
            }
        }
    }
    let (_, pick) = best.ok_or(FlowError::NoPick { threshold, max: peak })?;
    let mut states = Vec::with_capacity(traj.states.len());
    for st in &traj.states {
        let m = st.radial_metric()?.scaled(pick.q);
        states.push(FlowState::radial(pick.q * (st.t - pick.s), FlowKind::Krf, m));
    }
    let trajectory = Trajectory::from_states(FlowKind::Krf, states, traj.meta.scheme)?;
    let bound_ratio = match rule {
        PickRule::TypeI => trajectory
            .rows()
            .filter(|d| d.t >= 0.0)
            .map(|d| (d.t, d.rm_max * (omega - d.t) / (omega + eps)))
            .collect(),
        PickRule::TypeII { .. } => Vec::new(),
    };
    Ok(Blowup {
        pick,
        trajectory,
        omega,
        bound_ratio,
    })
}

/// Exact unnormalized flow `(1 - s) g` from a Kahler-Einstein metric with `Rc = g` at the listed times.
pub fn homothety(metric: &kahler_kernel::RadialMetric, times: &[f64]) -> Result<Trajectory> {
    let states = times
        .iter()
        .map(|s| FlowState::new(*s, FlowKind::Krf, HermitianMetricField::Radial(metric.scaled(1.0 - s))))
        .collect();
    Trajectory::from_states(FlowKind::Krf, states, crate::state::Scheme::Rk4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use kahler_kernel::{PeriodicGrid, PeriodicMetric, RadialGrid, RadialMetric};
    use std::sync::Arc;

    fn round(degree: usize) -> Trajectory {
        let fs = RadialMetric::fubini_study(Arc::new(RadialGrid::new(1, degree).unwrap()));
        let times: Vec<f64> = (0..=90).map(|k| k as f64 * 0.01).collect();
        homothety(&fs, &times).unwrap()
    }

    #[test]
    fn round_sphere_is_type_one() {
        let r = classify_type(&round(16)).unwrap();
        assert_eq!(r.classification, TypeClass::TypeI);
        assert!((r.singular_time - 1.0).abs() < 1e-14);
        let p0 = r.products[0].1;
        assert!(r.products.iter().all(|(_, p)| (p - p0).abs() < 1e-2 * p0));
        assert!(r.nkrf_k_max.iter().all(|(_, k)| (k - p0).abs() < 1e-10));
        assert!((r.sup_product - p0).abs() < 1e-10 * p0);
    }

    #[test]
    fn flat_and_short_windows_are_inconclusive() {
        let pg = Arc::new(PeriodicGrid::new(1, 4).unwrap());
        let states = (0..6)
            .map(|k| FlowState::new(k as f64 * 0.1, FlowKind::Krf, HermitianMetricField::Periodic(PeriodicMetric::flat(pg.clone()))))
            .collect();
        let flat = Trajectory::from_states(FlowKind::Krf, states, crate::state::Scheme::Rk4).unwrap();
        assert!(matches!(classify_type(&flat), Err(FlowError::Inconclusive(_))));
        let fs = RadialMetric::fubini_study(Arc::new(RadialGrid::new(1, 8).unwrap()));
        let short = homothety(&fs, &[0.0, 0.05, 0.1, 0.15, 0.2]).unwrap();
        assert!(matches!(classify_type(&short), Err(FlowError::Inconclusive(_))));
    }

    #[test]
    fn blowup_of_the_round_sphere() {
        let traj = round(16);
        let b = blowup_rescale(&traj, PickRule::TypeI, 0.5, 1e-6).unwrap();
        assert!(((big_t(&traj) - b.pick.s) * b.pick.q - b.omega).abs() < 1e-10 * b.omega);
        let k = b.trajectory.states.iter().position(|s| s.t == 0.0).unwrap();
        assert!((b.trajectory.rows().nth(k).unwrap().rm_max - 1.0).abs() < 1e-10);
        assert!(b.max_bound_ratio() <= 1.0);
        // Q g^(s_k + t/Q) = (omega - t) g_FS with omega = |Rm_FS|
        let fs = traj.states[0].radial_metric().unwrap();
        assert!((b.omega - fs_rm(&fs)).abs() < 1e-10);
        for st in &b.trajectory.states {
            let expect = fs.scaled(b.omega - st.t);
            let got = st.radial_metric().unwrap();
            assert!(got.beta.iter().zip(&expect.beta).all(|(x, y)| (x - y).abs() < 1e-12));
        }
        assert!(matches!(blowup_rescale(&traj, PickRule::TypeI, 1e9, 1e-6), Err(FlowError::NoPick { .. })));
    }

    fn big_t(traj: &Trajectory) -> f64 {
        singular_time(traj).unwrap()
    }

    fn fs_rm(m: &RadialMetric) -> f64 {
        let pack = curvature(&HermitianMetricField::Radial(m.clone()), &CurvatureOptions::unchecked()).unwrap();
        pack.rm_norm2[0].sqrt()
    }
}
