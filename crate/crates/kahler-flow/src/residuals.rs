//! Residuals of the evolution equations of `R`, `Rc` and `dV` along a stored trajectory,
//! with second-order time differences of the stored states.

use kahler_kernel::{RadialBackend, RadialGeometry};
use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::state::{FlowKind, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionResiduals {
    pub times: Vec<f64>,
    /// `sup |R_t - (Delta R + |Rc|^2 - lambda R)|`.
    pub scalar: Vec<f64>,
    /// `sup |d_t R_{i jbar} - (Delta R_{i jbar} + R_{i jbar k lbar} R_{l kbar} - R_{i kbar} R_{k jbar})|`
    /// in the orthonormal frame.
    pub ricci: Vec<f64>,
    /// `sup |d_t log dV - (n lambda - R)|`.
    pub volume: Vec<f64>,
}

impl EvolutionResiduals {
    pub fn sup_scalar(&self) -> f64 {
        self.scalar.iter().copied().fold(0.0, f64::max)
    }
    pub fn sup_ricci(&self) -> f64 {
        self.ricci.iter().copied().fold(0.0, f64::max)
    }
    pub fn sup_volume(&self) -> f64 {
        self.volume.iter().copied().fold(0.0, f64::max)
    }
}

/// Weights of the three-point derivative at `times[k]`, stencil start index.
fn stencil(times: &[f64], k: usize) -> (usize, [f64; 3]) {
    let last = times.len() - 1;
    if k == 0 {
        let (h1, h2) = (times[1] - times[0], times[2] - times[1]);
        (0, [-(2.0 * h1 + h2) / (h1 * (h1 + h2)), (h1 + h2) / (h1 * h2), -h1 / (h2 * (h1 + h2))])
    } else if k == last {
        let (h1, h2) = (times[last - 1] - times[last - 2], times[last] - times[last - 1]);
        (last - 2, [h2 / (h1 * (h1 + h2)), -(h1 + h2) / (h1 * h2), (2.0 * h2 + h1) / (h2 * (h1 + h2))])
    } else {
        let (h1, h2) = (times[k] - times[k - 1], times[k + 1] - times[k]);
        (k - 1, [-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2))])
    }
}

/// Second-order derivative at `times[k]` of a per-node series (centered inside, one-sided at the ends).
pub fn time_derivative(times: &[f64], series: &[Vec<f64>], k: usize) -> Vec<f64> {
    let (start, w) = stencil(times, k);
    (0..series[k].len())
        .map(|j| (0..3).map(|i| w[i] * series[start + i][j]).sum())
        .collect()
}

struct Snapshot {
    r: Vec<f64>,
    ric: (Vec<f64>, Vec<f64>),
    log_dv: Vec<f64>,
    geo: RadialGeometry,
}

fn snapshots(traj: &Trajectory) -> Result<Vec<Snapshot>> {
    traj.states
        .iter()
        .map(|s| {
            let m = s.radial_metric()?;
            let geo = m.geometry(RadialBackend::Collocation).map_err(|e| FlowError::at(s.t, e))?;
            Ok(Snapshot {
                r: geo.scalar_curvature(),
                ric: geo.ricci(),
                log_dv: geo.vol_density.iter().map(|v| v.ln()).collect(),
                geo,
            })
        })
        .collect()
}

fn sup(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, |m, x| m.max(x.abs()))
}

/// Residual series; the right side of the Ricci equation is evaluated as `d dbar R`
/// through the commutation identity, which the identity suite checks on its own.
pub fn evolution_residuals(traj: &Trajectory) -> Result<EvolutionResiduals> {
    if traj.states.len() < 3 {
        return Err(FlowError::Unsupported("time differencing needs at least three states".into()));
    }
    let lambda = traj.kind.lambda();
    let times = traj.times();
    let snaps = snapshots(traj)?;
    let n = snaps[0].geo.complex_dim();
    let rs: Vec<Vec<f64>> = snaps.iter().map(|s| s.r.clone()).collect();
    let rad: Vec<Vec<f64>> = snaps.iter().map(|s| s.ric.0.clone()).collect();
    let tan: Vec<Vec<f64>> = snaps.iter().map(|s| s.ric.1.clone()).collect();
    let ldv: Vec<Vec<f64>> = snaps.iter().map(|s| s.log_dv.clone()).collect();
    let mut out = EvolutionResiduals {
        times: times.clone(),
        scalar: Vec::new(),
        ricci: Vec::new(),
        volume: Vec::new(),
    };
    for (k, s) in snaps.iter().enumerate() {
        let rt = time_derivative(&times, &rs, k);
        let lap = s.geo.laplacian(&s.r);
        let (hr, ht) = s.geo.ddbar(&s.r);
        let (a, b) = &s.ric;
        let nm1 = (n - 1) as f64;
        out.scalar.push(sup((0..rt.len()).map(|j| {
            let rc2 = a[j] * a[j] + nm1 * b[j] * b[j];
            rt[j] - (lap[j] + rc2 - lambda * s.r[j])
        })));
        let at = time_derivative(&times, &rad, k);
        let mut ric = sup((0..at.len()).map(|j| at[j] + a[j] * (lambda - a[j]) - hr[j]));
        if n > 1 {
            let bt = time_derivative(&times, &tan, k);
            ric = ric.max(sup((0..bt.len()).map(|j| bt[j] + b[j] * (lambda - b[j]) - ht[j])));
        }
        out.ricci.push(ric);
        let vt = time_derivative(&times, &ldv, k);
        out.volume.push(sup((0..vt.len()).map(|j| vt[j] - (n as f64 * lambda - s.r[j]))));
    }
    Ok(out)
}

/// Residual of Hamilton's surface law `d R_g/d t_g = Delta_g R_g + R_g^2` for an
/// unnormalized CP^1 trajectory read through the Riemannian conventions
/// `R_g = 2R`, `Delta_g = 2 Delta`, `t_g = t/2`.
pub fn surface_law_residuals(traj: &Trajectory) -> Result<Vec<f64>> {
    if traj.kind != FlowKind::Krf {
        return Err(FlowError::Unsupported("the surface law is stated for the unnormalized flow".into()));
    }
    if traj.states.len() < 3 {
        return Err(FlowError::Unsupported("time differencing needs at least three states".into()));
    }
    let snaps = snapshots(traj)?;
    if snaps[0].geo.complex_dim() != 1 {
        return Err(FlowError::Unsupported("the surface law is for CP^1".into()));
    }
    let tg: Vec<f64> = traj.times().iter().map(|t| 0.5 * t).collect();
    let rg: Vec<Vec<f64>> = snaps.iter().map(|s| s.r.iter().map(|r| 2.0 * r).collect()).collect();
    Ok(snaps
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let rt = time_derivative(&tg, &rg, k);
            let lap: Vec<f64> = s.geo.laplacian(&rg[k]).iter().map(|v| 2.0 * v).collect();
            sup((0..rt.len()).map(|j| rt[j] - (lap[j] + rg[k][j] * rg[k][j])))
        })
        .collect())
}
