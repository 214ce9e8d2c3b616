//! Volume ratios `V(x_0, r) / r^{2n}` of Riemannian balls about the symmetry poles,
//! over radii where `R_g <= r^{-2}` on the ball and `r <= e^{t/2}`.

use kahler_flow::Trajectory;
use kahler_kernel::{HermitianMetricField, RadialBackend};
use kahler_models::{geodesic_table, Pole, SymmetricGeodesicTable};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::slack::SlackReport;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusPolicy {
    pub per_decade: usize,
    pub r_min: f64,
}

impl Default for RadiusPolicy {
    fn default() -> Self {
        RadiusPolicy { per_decade: 32, r_min: 1e-2 }
    }
}

impl RadiusPolicy {
    pub fn radii(&self, r_max: f64) -> Vec<f64> {
        let step = 10f64.powf(1.0 / self.per_decade as f64);
        std::iter::successors(Some(self.r_min), |r| Some(r * step)).take_while(|r| *r <= r_max).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleRatio {
    pub center: String,
    pub r: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoncollapseReport {
    /// Ratios over admissible `(center, r)` at each stored time.
    pub ratios: SlackReport,
    pub samples: Vec<Vec<AdmissibleRatio>>,
    /// Per-time minimum; `None` where no radius is admissible.
    pub kappa_series: Vec<(f64, Option<f64>)>,
    /// Run minimum over all admissible pairs.
    pub kappa: Option<f64>,
    pub no_admissible_radius: Vec<f64>,
    pub policy: RadiusPolicy,
}

impl NoncollapseReport {
    /// Relative spread `(max - min)/min` of the per-time minimum over `t` in `[t0, t1]`.
    pub fn variation(&self, t0: f64, t1: f64) -> Option<f64> {
        let ks: Vec<f64> = self
            .kappa_series
            .iter()
            .filter(|(t, _)| *t >= t0 && *t <= t1)
            .map(|(_, k)| *k)
            .collect::<Option<_>>()?;
        let lo = ks.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (!ks.is_empty()).then(|| (hi - lo) / lo)
    }
}

fn poles(n: usize) -> Vec<Pole> {
    if n == 1 {
        vec![Pole::Origin, Pole::Infinity]
    } else {
        vec![Pole::Origin]
    }
}

/// Riemannian `V(pole, r) / r^{2n}`.
pub fn ball_ratio(metric: &HermitianMetricField, pole: Pole, r: f64) -> Result<f64> {
    let table = geodesic_table(metric, pole)?;
    Ok(table.volume(r) / r.powi(2 * table.n as i32))
}

/// Largest Riemannian scalar curvature `2R` over nodes within distance `r` of the pole.
fn ball_sup(table: &SymmetricGeodesicTable, r_nodes: &[f64], r: f64) -> f64 {
    let deg = r_nodes.len() - 1;
    table
        .radii
        .iter()
        .enumerate()
        .filter(|(k, d)| *k == 0 || **d <= r)
        .map(|(k, _)| {
            let node = match table.center {
                Pole::Origin => k,
                Pole::Infinity => deg - k,
            };
            2.0 * r_nodes[node]
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn noncollapse(traj: &Trajectory, policy: &RadiusPolicy) -> Result<NoncollapseReport> {
    let per_time: Vec<Vec<AdmissibleRatio>> = traj
        .states
        .par_iter()
        .map(|s| {
            let metric = s.metric()?;
            let m = s.radial_metric()?;
            let n = m.grid.complex_dim();
            let r_nodes = m.geometry(RadialBackend::Collocation)?.scalar_curvature();
            let mut out = Vec::new();
            for pole in poles(n) {
                let table = geodesic_table(&metric, pole)?;
                for r in policy.radii((0.5 * s.t).exp().min(table.diameter)) {
                    if ball_sup(&table, &r_nodes, r) * r * r <= 1.0 {
                        out.push(AdmissibleRatio {
                            center: format!("{pole:?}"),
                            r,
                            ratio: table.volume(r) / r.powi(2 * n as i32),
                        });
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let times = traj.times();
    let kappa_series: Vec<(f64, Option<f64>)> = times
        .iter()
        .zip(&per_time)
        .map(|(t, v)| (*t, v.iter().map(|a| a.ratio).reduce(f64::min)))
        .collect();
    let kappa = kappa_series.iter().filter_map(|(_, k)| *k).reduce(f64::min);
    let no_admissible_radius = kappa_series.iter().filter(|(_, k)| k.is_none()).map(|(t, _)| *t).collect();
    let values = per_time.iter().map(|v| v.iter().map(|a| a.ratio).collect()).collect();
    Ok(NoncollapseReport {
        ratios: SlackReport::new("noncollapse ratio", times, values, 0.0, vec![], |_| None),
        samples: per_time,
        kappa_series,
        kappa,
        no_admissible_radius,
        policy: *policy,
    })
}
