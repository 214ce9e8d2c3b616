use kahler_flow::{time_derivative, Trajectory};
use kahler_kernel::{curvature, min_bisectional, CurvatureOptions, RadialBackend, RadialGeometry};
use rayon::prelude::*;

use crate::error::{EstimateError, Result};
use crate::slack::Hypothesis;

/// Random pairs sampled per node when searching bisectional minima in dimension two.
const BISECTIONAL_BUDGET: usize = 32;
pub(crate) const HYPOTHESIS_TOL: f64 = 1e-6;

pub(crate) struct Snap {
    pub t: f64,
    pub geo: RadialGeometry,
    pub r: Vec<f64>,
    pub dr: Vec<f64>,
    pub grad2: Vec<f64>,
}

pub(crate) fn snaps(traj: &Trajectory) -> Result<Vec<Snap>> {
    traj.states
        .par_iter()
        .map(|s| {
            let geo = s.radial_metric()?.geometry(RadialBackend::Collocation)?;
            let r = geo.scalar_curvature();
            let dr = geo.grid.deriv(&r, geo.backend);
            let grad2 = geo.grad_norm2_from(&dr);
            Ok(Snap { t: s.t, geo, r, dr, grad2 })
        })
        .collect()
}

pub(crate) fn r_dot(snaps: &[Snap]) -> Result<Vec<Vec<f64>>> {
    if snaps.len() < 3 {
        return Err(EstimateError::Unsupported("time differencing needs at least three states".into()));
    }
    let times: Vec<f64> = snaps.iter().map(|s| s.t).collect();
    let series: Vec<Vec<f64>> = snaps.iter().map(|s| s.r.clone()).collect();
    Ok((0..snaps.len()).map(|k| time_derivative(&times, &series, k)).collect())
}

/// Errors with the first nonpositive scalar curvature among the listed states.
pub(crate) fn require_positive(snaps: &[Snap], rows: &[usize]) -> Result<()> {
    for &k in rows {
        if let Some((node, &value)) = snaps[k].r.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(EstimateError::NonPositiveScalar { t: snaps[k].t, node, value });
        }
    }
    Ok(())
}

pub(crate) fn bisectional_hypothesis(traj: &Trajectory) -> Result<Hypothesis> {
    let mins: Vec<f64> = traj
        .states
        .par_iter()
        .map(|s| {
            let pack = curvature(&s.metric()?, &CurvatureOptions::unchecked())?;
            Ok(min_bisectional(&pack, BISECTIONAL_BUDGET, 17).value)
        })
        .collect::<Result<_>>()?;
    let observed = mins.into_iter().fold(f64::INFINITY, f64::min);
    Ok(Hypothesis {
        name: "nonnegative bisectional curvature".into(),
        holds: observed >= -HYPOTHESIS_TOL,
        observed,
    })
}

pub(crate) fn positive_hypothesis(snaps: &[Snap], rows: &[usize]) -> Hypothesis {
    let observed = rows.iter().flat_map(|&k| snaps[k].r.iter().copied()).fold(f64::INFINITY, f64::min);
    Hypothesis {
        name: "positive scalar curvature".into(),
        holds: observed > 0.0,
        observed,
    }
}
