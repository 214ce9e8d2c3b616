//! Entropy and W along a stored normalized flow trajectory.
//!
//! At each state the harness records `mu(g, 1)` and the weighted soliton defect
//! `int (|Rc + d dbar f - g|^2 + |nabla nabla f|^2) (2 pi)^{-n} e^{-f} dV` at the minimizer.
//! Separately, the minimizer at the last state is carried back to every earlier
//! state by the conjugate heat equation, which gives the coupled W series.

use std::sync::Arc;

use kahler_kernel::{RadialBackend, RadialGeometry, RadialGrid, RadialMetric};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::{mu_entropy, EntropyQuery};
use crate::error::{FunctionalError, Result};
use crate::geo::Geo;
use crate::w::{normalization, w_f};

/// Implicit substeps per trajectory interval for the conjugate heat equation.
const SUBSTEPS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityPoint {
    pub t: f64,
    pub mu: f64,
    /// `W(g(t), f(t), 1)` with `f` solving the conjugate heat equation backward from the last state.
    pub w_coupled: f64,
    pub coupled_constraint_error: f64,
    pub strictness: f64,
}

/// Weighted soliton defect of `(g, f)` at `sigma = 1`.
pub fn strictness_indicator(geo: &RadialGeometry, f: &[f64]) -> f64 {
    let n = geo.complex_dim();
    let nm1 = (n - 1) as f64;
    let (rr, rt) = geo.ricci();
    let (hr, ht) = geo.ddbar(f);
    let b2 = geo.hess20_norm2(f);
    let g: Vec<f64> = (0..f.len())
        .map(|j| {
            let ar = rr[j] + hr[j] - 1.0;
            let at = rt[j] + ht[j] - 1.0;
            (ar * ar + nm1 * at * at + b2[j]) * (-f[j]).exp()
        })
        .collect();
    normalization(n, 1.0) * geo.integrate(&g)
}

fn check_grids(traj: &[(f64, RadialMetric)]) -> Result<Arc<RadialGrid>> {
    let first = traj
        .first()
        .ok_or_else(|| FunctionalError::Unsupported("empty trajectory".into()))?;
    let grid = first.1.grid.clone();
    for (k, (t, m)) in traj.iter().enumerate() {
        if m.grid.complex_dim() != grid.complex_dim() || m.grid.degree() != grid.degree() {
            return Err(FunctionalError::Unsupported(format!("state {k} at t = {t} uses a different grid")));
        }
        if k > 0 && !(*t > traj[k - 1].0) {
            return Err(FunctionalError::Unsupported(format!("times are not increasing at state {k}")));
        }
    }
    Ok(grid)
}

/// One implicit Euler step of `d_tau v = Delta v - (R - n) v` on the metric `beta`.
fn conjugate_step(grid: &Arc<RadialGrid>, beta: &[f64], v: &[f64], h: f64) -> Result<Vec<f64>> {
    let geo = RadialGeometry::new(grid.clone(), beta, RadialBackend::Collocation)?;
    let m = v.len();
    let n = geo.complex_dim() as f64;
    let lap = geo.laplacian_matrix();
    let r = geo.scalar_curvature();
    let mut a = DMatrix::<f64>::zeros(m, m);
    for j in 0..m {
        for k in 0..m {
            a[(j, k)] = -h * lap[j * m + k];
        }
        a[(j, j)] += 1.0 + h * (r[j] - n);
    }
    let x = a
        .lu()
        .solve(&DVector::from_column_slice(v))
        .ok_or_else(|| FunctionalError::PoissonFailed("conjugate heat step is singular".into()))?;
    Ok(x.iter().copied().collect())
}

/// `mu(g(t), 1)`, strictness indicator and coupled W for every stored state.
pub fn monotonicity_harness(traj: &[(f64, RadialMetric)]) -> Result<Vec<MonotonicityPoint>> {
    let grid = check_grids(traj)?;
    let per_state: Vec<(f64, f64, Vec<f64>)> = traj
        .par_iter()
        .map(|(_, m)| -> Result<(f64, f64, Vec<f64>)> {
            let r = mu_entropy(&EntropyQuery::new(m.clone(), 1.0))?;
            let f: Vec<f64> = r.u.iter().map(|u| -2.0 * u.ln()).collect();
            let geo = m.geometry(RadialBackend::Collocation)?;
            Ok((r.mu, strictness_indicator(&geo, &f), f))
        })
        .collect::<Result<_>>()?;

    let last = traj.len() - 1;
    let mut v: Vec<f64> = per_state[last].2.iter().map(|f| (-f).exp()).collect();
    let mut coupled = vec![(0.0, 0.0); traj.len()];
    for k in (0..traj.len()).rev() {
        if k < last {
            let (t0, b0) = (traj[k].0, &traj[k].1.beta);
            let (t1, b1) = (traj[k + 1].0, &traj[k + 1].1.beta);
            let h = (t1 - t0) / SUBSTEPS as f64;
            for s in 1..=SUBSTEPS {
                // tau increases toward earlier times; interpolate the metric at the new time
                let theta = 1.0 - s as f64 / SUBSTEPS as f64;
                let beta: Vec<f64> = b0.iter().zip(b1).map(|(a, b)| a + theta * (b - a)).collect();
                v = conjugate_step(&grid, &beta, &v, h)?;
            }
        }
        if v.iter().any(|x| !(*x > 0.0)) {
            return Err(FunctionalError::Unsupported(format!("conjugate heat solution lost positivity at state {k}")));
        }
        let f: Vec<f64> = v.iter().map(|x| -x.ln()).collect();
        let geo = Geo::Radial(traj[k].1.geometry(RadialBackend::Collocation)?);
        let w = w_f(&geo, &f, 1.0);
        coupled[k] = (w.value, w.constraint_error);
    }

    Ok(traj
        .iter()
        .zip(per_state)
        .zip(coupled)
        .map(|(((t, _), (mu, strictness, _)), (w, e))| MonotonicityPoint {
            t: *t,
            mu,
            w_coupled: w,
            coupled_constraint_error: e,
            strictness,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use kahler_models::bump_profile;

    #[test]
    fn kahler_einstein_trajectory_is_stationary() {
        for n in 1..=2 {
            let grid = Arc::new(RadialGrid::new(n, 24).unwrap());
            let fs = RadialMetric::fubini_study(grid);
            let traj: Vec<(f64, RadialMetric)> = (0..4).map(|k| (0.25 * k as f64, fs.clone())).collect();
            let pts = monotonicity_harness(&traj).unwrap();
            for p in &pts {
                assert!((p.mu - pts[0].mu).abs() < 1e-10);
                assert!(p.strictness < 1e-16, "{}", p.strictness);
                assert!((p.w_coupled - pts[0].mu).abs() < 1e-10, "{p:?}");
                assert!(p.coupled_constraint_error.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn perturbed_state_has_positive_indicator() {
        let grid = Arc::new(RadialGrid::new(1, 48).unwrap());
        let m = bump_profile(grid, 0.2).unwrap();
        let metric = RadialMetric::new(m.radial_grid(), m.beta()).unwrap();
        let pts = monotonicity_harness(&[(0.0, metric)]).unwrap();
        assert!(pts[0].strictness > 1e-4, "{}", pts[0].strictness);
    }

    #[test]
    fn bad_trajectories_are_rejected() {
        assert!(monotonicity_harness(&[]).is_err());
        let fs = RadialMetric::fubini_study(Arc::new(RadialGrid::new(1, 16).unwrap()));
        assert!(monotonicity_harness(&[(1.0, fs.clone()), (0.5, fs)]).is_err());
    }
}
