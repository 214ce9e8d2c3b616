//! Time series of the quantities bounded uniformly along the normalized flow: curvature,
//! diameter, the Ricci potential and its gradient, and `a(t)`.

use kahler_flow::{FlowKind, Trajectory};
use kahler_functionals::{a_coefficient, ricci_potential};
use kahler_kernel::RadialBackend;
use kahler_models::{geodesic_table, Pole};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{EstimateError, Result};
use crate::noncollapse::NoncollapseReport;

pub const FLOOR_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub t: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub r_avg: f64,
    pub diam: f64,
    pub f_min: f64,
    pub f_max: f64,
    pub grad_f_sup: f64,
    /// `sup |grad f|^2 / (f + 2 C_3)`.
    pub grad_ratio: f64,
    /// `sup R / (f + 2 C_3)`.
    pub scalar_ratio: f64,
    pub a: f64,
    pub kappa: Option<f64>,
    /// A point `xi` with `R = n`, located by linear interpolation between nodes.
    pub level_xi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub rows: Vec<BoundsRow>,
    /// `max(1, -inf f) + 1`.
    pub c3: f64,
    /// Observed `sup |a|`.
    pub c2: f64,
    pub sup_grad_ratio: f64,
    pub sup_scalar_ratio: f64,
    pub sup_diam: f64,
    pub sup_abs_r: f64,
    /// Largest `|avg R - n|`.
    pub avg_r_deviation: f64,
    pub kappa_min: Option<f64>,
    /// Times where `R_min(t)` falls below the floor forced by the maximum principle.
    pub floor_violations: Vec<f64>,
}

impl BoundsReport {
    pub fn floor_holds(&self) -> bool {
        self.floor_violations.is_empty()
    }
}

struct Raw {
    t: f64,
    r: Vec<f64>,
    r_avg: f64,
    diam: f64,
    f: Vec<f64>,
    grad2: Vec<f64>,
    a: f64,
}

fn level_point(xi: &[f64], r: &[f64], n: f64) -> Option<f64> {
    (0..r.len() - 1).find_map(|j| {
        let (a, b) = (r[j] - n, r[j + 1] - n);
        if a == 0.0 {
            Some(xi[j])
        } else if a * b < 0.0 {
            Some(xi[j] + (xi[j + 1] - xi[j]) * a / (a - b))
        } else {
            None
        }
    })
}

pub fn perelman_tracker(traj: &Trajectory, noncollapse: Option<&NoncollapseReport>) -> Result<BoundsReport> {
    if traj.kind == FlowKind::Krf {
        return Err(EstimateError::Unsupported("the tracker follows the normalized flow".into()));
    }
    let raw: Vec<Raw> = traj
        .states
        .par_iter()
        .map(|s| {
            let metric = s.metric()?;
            let geo = s.radial_metric()?.geometry(RadialBackend::Collocation)?;
            let r = geo.scalar_curvature();
            let pot = ricci_potential(&metric)?;
            let f = pot.f.real_part();
            Ok(Raw {
                t: s.t,
                r_avg: geo.integrate(&r) / geo.volume(),
                diam: geodesic_table(&metric, Pole::Origin)?.diameter,
                grad2: geo.grad_norm2(&f),
                a: a_coefficient(&metric, &pot.f)?,
                r,
                f,
            })
        })
        .collect::<Result<_>>()?;
    let n = traj.states[0].grid().map(|g| g.complex_dim()).unwrap_or(1) as f64;
    let xi = traj.states[0].grid().map(|g| g.xi().to_vec()).unwrap_or_default();
    let inf_f = raw.iter().flat_map(|x| x.f.iter().copied()).fold(f64::INFINITY, f64::min);
    let c3 = (-inf_f).max(1.0) + 1.0;
    let kappa_at = |k: usize| noncollapse.and_then(|nc| nc.kappa_series.get(k).and_then(|p| p.1));
    let rows: Vec<BoundsRow> = raw
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let sup = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let den: Vec<f64> = x.f.iter().map(|f| f + 2.0 * c3).collect();
            BoundsRow {
                t: x.t,
                r_min: x.r.iter().copied().fold(f64::INFINITY, f64::min),
                r_max: sup(&x.r),
                r_avg: x.r_avg,
                diam: x.diam,
                f_min: x.f.iter().copied().fold(f64::INFINITY, f64::min),
                f_max: sup(&x.f),
                grad_f_sup: sup(&x.grad2),
                grad_ratio: sup(&x.grad2.iter().zip(&den).map(|(g, d)| g / d).collect::<Vec<_>>()),
                scalar_ratio: sup(&x.r.iter().zip(&den).map(|(r, d)| r / d).collect::<Vec<_>>()),
                a: x.a,
                kappa: kappa_at(k),
                level_xi: level_point(&xi, &x.r, n),
            }
        })
        .collect();
    let r0 = rows[0].r_min;
    let floor = if r0 < 0.0 { r0 } else { 0.0 } - FLOOR_TOL;
    let fold = |g: fn(&BoundsRow) -> f64| rows.iter().map(g).fold(f64::NEG_INFINITY, f64::max);
    Ok(BoundsReport {
        c3,
        c2: fold(|r| r.a.abs()),
        sup_grad_ratio: fold(|r| r.grad_ratio),
        sup_scalar_ratio: fold(|r| r.scalar_ratio),
        sup_diam: fold(|r| r.diam),
        sup_abs_r: fold(|r| r.r_max.abs().max(r.r_min.abs())),
        avg_r_deviation: rows.iter().map(|r| (r.r_avg - n).abs()).fold(0.0, f64::max),
        kappa_min: noncollapse.and_then(|nc| nc.kappa),
        floor_violations: rows.iter().filter(|r| r.r_min < floor).map(|r| r.t).collect(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use kahler_flow::{integrate, FlowState, RunOptions};
    use kahler_kernel::{RadialGrid, RadialMetric};
    use std::f64::consts::PI;
    use std::sync::Arc;

    #[test]
    fn kahler_einstein_series_are_constant() {
        let fs = RadialMetric::fubini_study(Arc::new(RadialGrid::new(1, 16).unwrap()));
        let traj = integrate(FlowState::radial(0.0, FlowKind::Nkrf, fs), &RunOptions::new(0.25, 1.0)).unwrap();
        let rep = perelman_tracker(&traj, None).unwrap();
        for r in &rep.rows {
            assert!((r.r_min - 1.0).abs() < 1e-10 && (r.r_max - 1.0).abs() < 1e-10);
            assert!(r.f_min.abs() < 1e-10 && r.f_max.abs() < 1e-10 && r.a.abs() < 1e-10);
            assert!((r.diam - PI).abs() < 1e-8);
        }
        assert!(rep.floor_holds() && rep.avg_r_deviation < 1e-10);
        assert_eq!(rep.c3, 2.0);
    }

    #[test]
    fn level_point_interpolates() {
        assert_eq!(level_point(&[-1.0, 0.0, 1.0], &[0.5, 1.5, 2.0], 1.0), Some(-0.5));
        assert_eq!(level_point(&[-1.0, 1.0], &[2.0, 3.0], 1.0), None);
    }
}
