//! Li-Yau type estimates for the scalar curvature under positive bisectional curvature:
//! pointwise, two-point, and the matrix quadratic of the unnormalized flow.

use kahler_flow::{FlowKind, Trajectory};
use kahler_kernel::C64;
use kahler_models::{geodesic_table, Pole};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{bisectional_hypothesis, positive_hypothesis, r_dot, require_positive, snaps};
use crate::error::{EstimateError, Result};
use crate::slack::SlackReport;

pub const HARNACK_TOL: f64 = 1e-6;

/// `1/(1 - e^{-t})` for the normalized flow, `1/t` for the unnormalized one.
fn time_weight(kind: FlowKind, t: f64) -> f64 {
    match kind {
        FlowKind::Krf => 1.0 / t,
        FlowKind::Nkrf | FlowKind::Potential => -1.0 / (-t).exp_m1(),
    }
}

fn window(traj: &Trajectory, t_min: f64) -> Vec<usize> {
    traj.states
        .iter()
        .enumerate()
        .filter(|(_, s)| s.t > 0.0 && s.t >= t_min)
        .map(|(k, _)| k)
        .collect()
}

/// `R_t - |grad R|^2/R + R w(t)` at every node of the stored states with `t >= t_min`.
pub fn harnack_pointwise(traj: &Trajectory, t_min: f64) -> Result<SlackReport> {
    let sn = snaps(traj)?;
    let rt = r_dot(&sn)?;
    let rows = window(traj, t_min);
    require_positive(&sn, &rows)?;
    let values = rows
        .iter()
        .map(|&k| {
            let s = &sn[k];
            let w = time_weight(traj.kind, s.t);
            (0..s.r.len()).map(|j| rt[k][j] - s.grad2[j] / s.r[j] + s.r[j] * w).collect()
        })
        .collect();
    let xi = sn[0].geo.grid.xi().to_vec();
    let hyp = vec![bisectional_hypothesis(traj)?, positive_hypothesis(&sn, &rows)];
    let label = match traj.kind {
        FlowKind::Krf => "li-yau (unnormalized)",
        _ => "li-yau (normalized)",
    };
    Ok(SlackReport::new(label, rows.iter().map(|&k| sn[k].t).collect(), values, HARNACK_TOL, hyp, |j| xi.get(j).copied()))
}

/// Point pair `(x, t_1; y, t_2)` by node and stored-state index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarnackPair {
    pub x: usize,
    pub t1: usize,
    pub y: usize,
    pub t2: usize,
}

/// `count` seeded pairs with `t_min <= t_1 < t_2`; `x` and `y` are any nodes.
pub fn seeded_pairs(traj: &Trajectory, count: usize, seed: u64, t_min: f64) -> Vec<HarnackPair> {
    let rows = window(traj, t_min);
    if rows.len() < 2 {
        return Vec::new();
    }
    let nodes = traj.states[0].grid().map(|g| g.len()).unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let a = rng.random_range(0..rows.len() - 1);
            let b = rng.random_range(a + 1..rows.len());
            HarnackPair {
                x: rng.random_range(0..nodes),
                t1: rows[a],
                y: rng.random_range(0..nodes),
                t2: rows[b],
            }
        })
        .collect()
}

/// `(e^{t_2}-1)/(e^{t_1}-1) exp(e^{t_2-t_1} d_{t_1}^2 / 4(t_2-t_1)) R(y,t_2) - R(x,t_1)` per pair, with
/// `d_{t_1}` the Riemannian distance along the common meridian through the origin.
pub fn harnack_two_point(traj: &Trajectory, pairs: &[HarnackPair]) -> Result<SlackReport> {
    if traj.kind == FlowKind::Krf {
        return Err(EstimateError::Unsupported("the two-point estimate is stated for the normalized flow".into()));
    }
    let sn = snaps(traj)?;
    let mut used: Vec<usize> = pairs.iter().flat_map(|p| [p.t1, p.t2]).collect();
    used.sort_unstable();
    used.dedup();
    if let Some(&k) = used.iter().find(|&&k| k >= sn.len()) {
        return Err(EstimateError::Unsupported(format!("state index {k} is out of range")));
    }
    require_positive(&sn, &used)?;
    let mut tables = std::collections::BTreeMap::new();
    for p in pairs {
        if p.t1 > p.t2 || sn[p.t1].t <= 0.0 {
            return Err(EstimateError::Unsupported(format!("pair {p:?} needs 0 < t_1 <= t_2")));
        }
        if let std::collections::btree_map::Entry::Vacant(e) = tables.entry(p.t1) {
            e.insert(geodesic_table(&traj.states[p.t1].metric()?, Pole::Origin)?);
        }
    }
    let values = pairs
        .iter()
        .map(|p| {
            let (t1, t2) = (sn[p.t1].t, sn[p.t2].t);
            let r1 = sn[p.t1].r[p.x];
            let r2 = sn[p.t2].r[p.y];
            let radii = &tables[&p.t1].radii;
            let d = (radii[p.x] - radii[p.y]).abs();
            let exponent = if d == 0.0 { 0.0 } else { (t2 - t1).exp() * d * d / (4.0 * (t2 - t1)) };
            let factor = t2.exp_m1() / t1.exp_m1();
            vec![factor * exponent.exp() * r2 - r1]
        })
        .collect();
    let hyp = vec![bisectional_hypothesis(traj)?, positive_hypothesis(&sn, &used)];
    let times = pairs.iter().map(|p| sn[p.t1].t).collect();
    let xi = sn[0].geo.grid.xi().to_vec();
    let xs: Vec<usize> = pairs.iter().map(|p| p.x).collect();
    let mut rep = SlackReport::new("harnack two-point", times, values, HARNACK_TOL, hyp, |_| None);
    if let Some(w) = rep.witness.as_mut() {
        w.xi = Some(xi[xs[w.time_index]]);
    }
    Ok(rep)
}

/// `Z(V, W) = |W|^2 (R_t + 2 Re(a V) + K |V|^2 + R/t)` on CP^1 in the unit frame, where
/// `a` is the frame component of `dR` and `K = R` the curvature.
pub fn lyh_value(r_t: f64, r: f64, a: f64, t: f64, v: C64, w: C64) -> f64 {
    w.norm_sqr() * (r_t + 2.0 * (v * a).re + r * v.norm_sqr() + r / t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyhSweep {
    /// Samples per node: the first is `V = -grad log R`, the second `V = 0`, the rest seeded.
    pub per_node: usize,
    pub seed: u64,
    pub t_min: f64,
}

/// Matrix Li-Yau-Hamilton quadric of the unnormalized flow over seeded `(V, W)`.
pub fn lyh_quadratic(traj: &Trajectory, sweep: &LyhSweep) -> Result<SlackReport> {
    if traj.kind != FlowKind::Krf {
        return Err(EstimateError::Unsupported("the quadric is stated for the unnormalized flow".into()));
    }
    let sn = snaps(traj)?;
    if sn[0].geo.complex_dim() != 1 {
        return Err(EstimateError::Unsupported("the quadric sweep is implemented on CP^1".into()));
    }
    let rt = r_dot(&sn)?;
    let rows = window(traj, sweep.t_min);
    require_positive(&sn, &rows)?;
    let per = sweep.per_node.max(2);
    let mut rng = ChaCha8Rng::seed_from_u64(sweep.seed);
    let np1 = sn[0].geo.grid.class_constant();
    let values = rows
        .iter()
        .map(|&k| {
            let s = &sn[k];
            let q = s.geo.grid.q();
            let mut row = Vec::with_capacity(per * s.r.len());
            for j in 0..s.r.len() {
                // frame component of dR along the unit radial vector
                let a = (q[j] * (-s.geo.rho[j]).exp() / np1).sqrt() * s.dr[j];
                let reach = 3.0 * a.abs() / s.r[j] + 1.0;
                for i in 0..per {
                    let v = match i {
                        0 => C64::new(-a / s.r[j], 0.0),
                        1 => C64::new(0.0, 0.0),
                        _ => C64::from_polar(reach * rng.random::<f64>(), std::f64::consts::TAU * rng.random::<f64>()),
                    };
                    let w = if i < 2 { C64::new(1.0, 0.0) } else { C64::from_polar(1.0, std::f64::consts::TAU * rng.random::<f64>()) };
                    row.push(lyh_value(rt[k][j], s.r[j], a, s.t, v, w));
                }
            }
            row
        })
        .collect();
    let xi = sn[0].geo.grid.xi().to_vec();
    let hyp = vec![bisectional_hypothesis(traj)?, positive_hypothesis(&sn, &rows)];
    Ok(SlackReport::new(
        "li-yau-hamilton quadric",
        rows.iter().map(|&k| sn[k].t).collect(),
        values,
        HARNACK_TOL,
        hyp,
        |j| xi.get(j / per).copied(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use kahler_flow::{homothety, integrate, to_krf, FlowState, RunOptions};
    use kahler_kernel::{RadialGrid, RadialMetric};
    use kahler_models::bump_profile;
    use std::sync::Arc;

    fn ke_run() -> Trajectory {
        let fs = RadialMetric::fubini_study(Arc::new(RadialGrid::new(1, 16).unwrap()));
        integrate(FlowState::radial(0.0, FlowKind::Nkrf, fs), &RunOptions::new(0.1, 1.0)).unwrap()
    }

    fn bumped_run() -> Trajectory {
        let p = bump_profile(Arc::new(RadialGrid::new(1, 24).unwrap()), 0.04).unwrap();
        let m = RadialMetric::new(p.radial_grid(), p.beta()).unwrap();
        integrate(FlowState::radial(0.0, FlowKind::Nkrf, m), &RunOptions::new(0.01, 1.0)).unwrap()
    }

    #[test]
    fn kahler_einstein_slack_is_exact() {
        let traj = ke_run();
        let rep = harnack_pointwise(&traj, 0.0).unwrap();
        for (t, row) in rep.times.iter().zip(&rep.values) {
            let expect = 1.0 / (1.0 - (-t).exp());
            assert!(row.iter().all(|v| (v - expect).abs() < 1e-9 * expect), "{t}");
        }
        assert!(rep.asserted() && rep.passes());
    }

    #[test]
    fn degenerate_and_kahler_einstein_pairs() {
        let traj = ke_run();
        let same = harnack_two_point(&traj, &[HarnackPair { x: 3, t1: 4, y: 3, t2: 4 }]).unwrap();
        assert!(same.min.abs() < 1e-12);
        let pairs = seeded_pairs(&traj, 200, 1, 0.1);
        assert_eq!(pairs.len(), 200);
        let rep = harnack_two_point(&traj, &pairs).unwrap();
        assert!(rep.min >= -1e-9);
    }

    #[test]
    fn positive_run_satisfies_the_estimates() {
        let traj = bumped_run();
        let p = harnack_pointwise(&traj, 0.1).unwrap();
        assert!(p.asserted(), "{:?}", p.hypotheses);
        assert!(p.min >= -HARNACK_TOL, "{}", p.min);
        let two = harnack_two_point(&traj, &seeded_pairs(&traj, 1000, 7, 0.1)).unwrap();
        assert!(two.min >= -HARNACK_TOL, "{}", two.min);
    }

    #[test]
    fn quadric_reduces_to_the_scalar_estimate() {
        let k = to_krf(&bumped_run(), Some(0.5)).unwrap();
        let sweep = LyhSweep { per_node: 6, seed: 2, t_min: 0.05 };
        let z = lyh_quadratic(&k, &sweep).unwrap();
        let h = harnack_pointwise(&k, 0.05).unwrap();
        assert_eq!(z.times, h.times);
        for (zr, hr) in z.values.iter().zip(&h.values) {
            for (j, hv) in hr.iter().enumerate() {
                assert!((zr[j * 6] - hv).abs() < 1e-8 * hv.abs().max(1.0));
            }
        }
        assert!(z.min >= -HARNACK_TOL, "{}", z.min);
    }

    #[test]
    fn round_homothety_trace_form() {
        // R(s) = 1/(1-s): R_t + R/t > 0 with V = 0
        let fs = RadialMetric::fubini_study(Arc::new(RadialGrid::new(1, 12).unwrap()));
        let times: Vec<f64> = (1..=20).map(|k| k as f64 * 0.02).collect();
        let z = lyh_quadratic(&homothety(&fs, &times).unwrap(), &LyhSweep { per_node: 2, seed: 0, t_min: 0.0 }).unwrap();
        for (t, row) in z.times.iter().zip(&z.values) {
            let r = 1.0 / (1.0 - t);
            assert!((row[1] - (r * r + r / t)).abs() < 1e-2 * r * r, "{t}");
        }
    }
}
