//! Single steps of the three flows.
//!
//! On a radial profile the flow `dg/dt = -Rc + lambda g` is the scalar equation
//! `beta_t = lambda - Ric_tan(beta)`; its radial component follows by differentiating in `s`.
//! The tangential Ricci eigenvalue is evaluated from `-d dbar log det g`, which stays smooth
//! at both poles for every `n`.

use kahler_kernel::radial::ricci_tangential;
use kahler_kernel::{curvature, CurvatureOptions, RadialBackend, RadialGeometry, RadialMetric};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::potential::PotentialData;
use crate::state::{FlowKind, FlowState, Representation, Scheme};

/// Class coefficient below which the unnormalized flow halts.
pub const SINGULAR_CLASS_FLOOR: f64 = 1e-3;
/// Curvature above which the unnormalized flow halts.
pub const SINGULAR_CURVATURE_CEILING: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOptions {
    pub scheme: Scheme,
    /// Curvature step bound `dt <= cfl / K_max`.
    pub cfl: f64,
    /// RK4 stability bound `dt <= stability / (spectral radius of the linearization)`.
    pub stability: f64,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions {
            scheme: Scheme::Rk4,
            cfl: 0.1,
            stability: 2.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepBound {
    pub curvature: f64,
    /// Spectral-radius estimate of the linearized right-hand side.
    pub spectral: f64,
    pub k_max: f64,
}

impl StepBound {
    pub fn dt(&self, opts: &StepOptions) -> f64 {
        match opts.scheme {
            Scheme::Rk4 => self.curvature.min(self.spectral),
            Scheme::Imex => self.curvature,
        }
    }
}

/// On Chebyshev-Lobatto nodes the collocated Laplacian of the Fubini-Study metric has
/// spectrum `-l(l + n)/(n + 1)`, `l <= N`; for other metrics the coefficients scale by
/// `e^{-rho}` and `e^{-beta}`.
fn spectral_radius(geo: &RadialGeometry) -> f64 {
    let n = geo.complex_dim() as f64;
    let deg = geo.grid.degree() as f64;
    let sup = geo
        .rho
        .iter()
        .chain(&geo.beta)
        .map(|v| (-v).exp())
        .fold(0.0, f64::max);
    1.05 * deg * (deg + n) / (n + 1.0) * sup + 1.0
}

fn curvature_max(metric: &RadialMetric) -> std::result::Result<f64, kahler_kernel::KernelError> {
    let pack = curvature(&kahler_kernel::HermitianMetricField::Radial(metric.clone()), &CurvatureOptions::unchecked())?;
    Ok(pack.rm_norm2.iter().copied().fold(0.0, f64::max).sqrt())
}

fn geometry_of_state(state: &FlowState) -> Result<RadialGeometry> {
    let geo = match &state.repr {
        Representation::Metric(_) => {
            let m = state.radial_metric()?;
            m.geometry(RadialBackend::Collocation)
        }
        Representation::Potential(p) => p.geometry_of(&p.phi),
    };
    geo.map_err(|e| FlowError::at(state.t, e))
}

pub fn step_bound(state: &FlowState, opts: &StepOptions) -> Result<StepBound> {
    let geo = geometry_of_state(state)?;
    let k_max = curvature_max(&state.radial_metric()?).map_err(|e| FlowError::at(state.t, e))?;
    Ok(StepBound {
        curvature: opts.cfl / k_max.max(1e-300),
        spectral: opts.stability / spectral_radius(&geo),
        k_max,
    })
}

/// Right-hand side of the evolved variable: `beta` for tensor flows, `phi` for the potential flow.
pub(crate) enum Rhs<'a> {
    Tensor { metric: &'a RadialMetric, lambda: f64 },
    Potential(&'a PotentialData),
}

impl Rhs<'_> {
    fn eval(&self, y: &[f64]) -> std::result::Result<Vec<f64>, FlowError> {
        match self {
            Rhs::Tensor { metric, lambda } => {
                let rt = ricci_tangential(&metric.grid, y, RadialBackend::Collocation)?;
                Ok(rt.iter().map(|r| lambda - r).collect())
            }
            Rhs::Potential(p) => p.velocity(y),
        }
    }

    /// Laplacian collocation matrix at `y`, the principal part of the linearization.
    fn linear_part(&self, y: &[f64]) -> std::result::Result<Vec<f64>, FlowError> {
        let geo = match self {
            Rhs::Tensor { metric, .. } => RadialGeometry::new(metric.grid.clone(), y, RadialBackend::Collocation)?,
            Rhs::Potential(p) => p.geometry_of(y)?,
        };
        Ok(geo.laplacian_matrix())
    }

    fn step(&self, y: &[f64], dt: f64, scheme: Scheme) -> std::result::Result<Vec<f64>, FlowError> {
        let axpy = |a: &[f64], k: &[f64], h: f64| -> Vec<f64> { a.iter().zip(k).map(|(x, d)| x + h * d).collect() };
        let out = match scheme {
            Scheme::Rk4 => {
                let k1 = self.eval(y)?;
                let k2 = self.eval(&axpy(y, &k1, 0.5 * dt))?;
                let k3 = self.eval(&axpy(y, &k2, 0.5 * dt))?;
                let k4 = self.eval(&axpy(y, &k3, dt))?;
                (0..y.len())
                    .map(|j| y[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]))
                    .collect::<Vec<_>>()
            }
            Scheme::Imex => {
                let m = y.len();
                let k = self.eval(y)?;
                let lap = self.linear_part(y)?;
                let mut a = DMatrix::<f64>::identity(m, m);
                for j in 0..m {
                    for i in 0..m {
                        a[(j, i)] -= dt * lap[j * m + i];
                    }
                }
                let rhs = DVector::from_iterator(m, k.iter().map(|v| dt * v));
                let d = a
                    .lu()
                    .solve(&rhs)
                    .ok_or_else(|| FlowError::Unsupported("implicit step matrix is singular".into()))?;
                (0..m).map(|j| y[j] + d[j]).collect()
            }
        };
        if out.iter().all(|v: &f64| v.is_finite()) {
            Ok(out)
        } else {
            Err(FlowError::NonPositive { t: f64::NAN, node: 0 })
        }
    }
}

/// Advances one step without the stability check.
pub(crate) fn advance(state: &FlowState, dt: f64, scheme: Scheme) -> Result<FlowState> {
    let t = state.t + dt;
    let tag = |e: FlowError| match e {
        FlowError::NonPositive { node, .. } => FlowError::NonPositive { t, node },
        FlowError::Kernel(k) => FlowError::at(t, k),
        other => other,
    };
    let repr = match &state.repr {
        Representation::Metric(_) => {
            let m = state.radial_metric()?;
            let beta = Rhs::Tensor { metric: &m, lambda: state.lambda }
                .step(&m.beta, dt, scheme)
                .map_err(tag)?;
            let next = RadialMetric {
                beta,
                ..m
            };
            next.geometry(RadialBackend::Collocation).map_err(|e| FlowError::at(t, e))?;
            Representation::Metric(kahler_kernel::HermitianMetricField::Radial(next))
        }
        Representation::Potential(p) => {
            let phi = Rhs::Potential(p).step(&p.phi, dt, scheme).map_err(tag)?;
            let mut next = p.with_phi(phi);
            next.b = next.velocity_parts(&next.phi).map_err(tag)?.1;
            next.geometry_of(&next.phi).map_err(|e| FlowError::at(t, e))?;
            Representation::Potential(next)
        }
    };
    Ok(FlowState {
        t,
        lambda: state.lambda,
        repr,
    })
}

/// Class coefficient `c` with `[omega] = c pi c_1`, read off the profile at infinity.
pub fn class_coefficient(metric: &RadialMetric) -> f64 {
    metric.beta.last().copied().unwrap_or(0.0).exp()
}

fn checked(state: &FlowState, dt: f64, opts: &StepOptions, kind: FlowKind) -> Result<FlowState> {
    if state.kind() != kind {
        return Err(FlowError::Unsupported(format!("{kind:?} step on a {:?} state", state.kind())));
    }
    if !(dt > 0.0) {
        return Err(FlowError::StepRejected { t: state.t, dt, bound: 0.0 });
    }
    let bound = step_bound(state, opts)?;
    if kind == FlowKind::Krf {
        let c = class_coefficient(&state.radial_metric()?) - dt;
        if c < SINGULAR_CLASS_FLOOR || bound.k_max > SINGULAR_CURVATURE_CEILING {
            return Err(FlowError::SingularTimeApproached {
                s: state.t + dt,
                class_coefficient: c,
                curvature: bound.k_max,
            });
        }
    }
    let b = bound.dt(opts);
    if dt > b {
        return Err(FlowError::StepRejected { t: state.t, dt, bound: b });
    }
    advance(state, dt, opts.scheme)
}

/// One step of `dg/dt = -Rc + g`.
pub fn nkrf_step(state: &FlowState, dt: f64, opts: &StepOptions) -> Result<FlowState> {
    checked(state, dt, opts, FlowKind::Nkrf)
}

/// One step of `dg/dt = -Rc`.
pub fn krf_step(state: &FlowState, dt: f64, opts: &StepOptions) -> Result<FlowState> {
    checked(state, dt, opts, FlowKind::Krf)
}

/// One step of the potential form of the normalized flow.
pub fn potential_flow_step(state: &FlowState, dt: f64, opts: &StepOptions) -> Result<FlowState> {
    checked(state, dt, opts, FlowKind::Potential)
}

#[cfg(test)]
mod tests {
    use super::*;
    use kahler_kernel::RadialGrid;
    use kahler_models::bump_profile;
    use std::sync::Arc;

    fn bumped(n: usize, degree: usize, eps: f64) -> RadialMetric {
        let p = bump_profile(Arc::new(RadialGrid::new(n, degree).unwrap()), eps).unwrap();
        RadialMetric::new(p.radial_grid(), p.beta()).unwrap()
    }

    fn sup(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn fubini_study_is_a_fixed_point() {
        for n in 1..=2 {
            let fs = RadialMetric::fubini_study(Arc::new(RadialGrid::new(n, 32).unwrap()));
            let s = FlowState::radial(0.0, FlowKind::Nkrf, fs.clone());
            let opts = StepOptions::default();
            let dt = step_bound(&s, &opts).unwrap().dt(&opts);
            let next = nkrf_step(&s, dt, &opts).unwrap();
            assert!(sup(&next.radial_metric().unwrap().beta, &fs.beta) < 1e-12);
        }
    }

    #[test]
    fn oversized_steps_are_rejected() {
        let s = FlowState::radial(0.0, FlowKind::Nkrf, bumped(1, 32, 0.1));
        let opts = StepOptions::default();
        let b = step_bound(&s, &opts).unwrap();
        assert!(matches!(nkrf_step(&s, 2.0 * b.dt(&opts), &opts), Err(FlowError::StepRejected { .. })));
        assert!(b.spectral < b.curvature);
        let imex = StepOptions { scheme: Scheme::Imex, ..opts };
        assert!(nkrf_step(&s, 2.0 * b.dt(&opts), &imex).is_ok());
    }

    #[test]
    fn krf_homothety() {
        // g(s) = (1 - s) g_FS, so beta(s) = log(1 - s) at every node
        let fs = RadialMetric::fubini_study(Arc::new(RadialGrid::new(1, 16).unwrap()));
        let opts = StepOptions::default();
        let mut s = FlowState::radial(0.0, FlowKind::Krf, fs);
        for _ in 0..100 {
            s = krf_step(&s, 0.005, &opts).unwrap();
        }
        let beta = s.radial_metric().unwrap().beta;
        assert!(beta.iter().all(|b| (b - 0.5f64.ln()).abs() < 1e-10), "{beta:?}");
    }

    #[test]
    fn krf_halts_near_the_singular_time() {
        let fs = RadialMetric::fubini_study(Arc::new(RadialGrid::new(1, 16).unwrap()));
        let s = FlowState::radial(0.99, FlowKind::Krf, fs.scaled(0.01));
        assert!(matches!(
            krf_step(&s, 0.0095, &StepOptions::default()),
            Err(FlowError::SingularTimeApproached { .. })
        ));
    }

    #[test]
    fn rk4_order() {
        let m = bumped(1, 16, 0.2);
        let opts = StepOptions::default();
        let s0 = FlowState::radial(0.0, FlowKind::Nkrf, m);
        let bound = step_bound(&s0, &opts).unwrap().dt(&opts);
        let run = |k: usize| {
            let dt = 0.4 / k as f64;
            assert!(dt <= bound);
            let mut s = s0.clone();
            for _ in 0..k {
                s = nkrf_step(&s, dt, &opts).unwrap();
            }
            s.radial_metric().unwrap().beta
        };
        let coarse = (0.4 / bound).ceil() as usize;
        let a = run(coarse);
        let b = run(2 * coarse);
        let c = run(4 * coarse);
        let order = (sup(&a, &b) / sup(&b, &c)).log2();
        assert!(order > 3.8, "order {order}");
    }

    #[test]
    fn volume_is_preserved_by_the_normalized_flow() {
        for n in 1..=2 {
            let m = bumped(n, 24, 0.2);
            let v0 = m.geometry(RadialBackend::Collocation).unwrap().volume();
            let opts = StepOptions::default();
            let mut s = FlowState::radial(0.0, FlowKind::Nkrf, m);
            let dt = step_bound(&s, &opts).unwrap().dt(&opts);
            for _ in 0..20 {
                let v = s.radial_metric().unwrap().geometry(RadialBackend::Collocation).unwrap().volume();
                s = nkrf_step(&s, dt, &opts).unwrap();
                let w = s.radial_metric().unwrap().geometry(RadialBackend::Collocation).unwrap().volume();
                assert!((w - v).abs() < 1e-9 * v);
            }
            let v = s.radial_metric().unwrap().geometry(RadialBackend::Collocation).unwrap().volume();
            assert!((v - v0).abs() < 1e-9 * v0);
        }
    }
}
