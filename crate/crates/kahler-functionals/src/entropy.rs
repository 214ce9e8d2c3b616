//! The entropy `mu(g, sigma) = inf W(g, u, sigma)` over U(n)-invariant `u` with
//! `(2 pi sigma)^{-n} int u^2 dV = 1`.
//!
//! A normalized gradient flow with implicit Laplacian and backtracking brings `u`
//! near the minimizer; Newton's method on the collocated Euler-Lagrange system
//! `sigma(-4 Delta u + R u) - 2u log u - 2n u = mu u` then drives the residual down.

use std::collections::HashMap;

use kahler_kernel::{HermitianMetricField, RadialBackend, RadialGeometry, RadialMetric};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{FunctionalError, Result};
use crate::geo::Geo;
use crate::potential::radial_dv;
use crate::w::{normalization, w_u};

/// Positivity floor applied before each re-projection.
pub const U_FLOOR: f64 = 1e-12;
/// Gradient-flow residual below which Newton is tried. The collocated Laplacian is not
/// exactly self-adjoint for the quadrature, so the flow alone stalls near the minimizer.
const NEWTON_SWITCH: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub enum InitPolicy {
    /// `u` constant, scaled to satisfy the constraint.
    Constant,
    /// Nodal values; rescaled onto the constraint.
    Given(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct EntropyQuery {
    pub metric: RadialMetric,
    pub sigma: f64,
    pub init: InitPolicy,
    /// Sup-norm target for the Euler-Lagrange residual.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl EntropyQuery {
    pub fn new(metric: RadialMetric, sigma: f64) -> Self {
        EntropyQuery {
            metric,
            sigma,
            init: InitPolicy::Constant,
            tolerance: 1e-8,
            max_iterations: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyResult {
    /// `W(g, u, sigma)` at the returned minimizer.
    pub w: f64,
    /// Entropy estimate; equals `w` at an exact minimizer.
    pub mu: f64,
    /// Multiplier of the Euler-Lagrange equation at the returned `u`.
    pub el_multiplier: f64,
    /// Minimizer on the query's radial nodes.
    pub u: Vec<f64>,
    pub el_residual: f64,
    pub constraint_error: f64,
    pub iterations: usize,
    /// Relative gap between a centered difference of `W` and the first variation
    /// implied by the Euler-Lagrange operator.
    pub variation_check: f64,
}

struct Problem {
    geo: Geo,
    lap: Vec<f64>,
    r: Vec<f64>,
    dv: Vec<f64>,
    n: f64,
    sigma: f64,
    c: f64,
    m: usize,
}

impl Problem {
    fn new(metric: &RadialMetric, sigma: f64) -> Result<Self> {
        let rg: RadialGeometry = metric.geometry(RadialBackend::Collocation)?;
        let lap = rg.laplacian_matrix();
        let r = rg.scalar_curvature();
        let dv = radial_dv(&rg);
        let n = rg.complex_dim();
        let m = r.len();
        Ok(Problem {
            geo: Geo::Radial(rg),
            lap,
            r,
            dv,
            n: n as f64,
            sigma,
            c: normalization(n, sigma),
            m,
        })
    }

    fn lap_apply(&self, u: &[f64]) -> Vec<f64> {
        (0..self.m)
            .map(|j| (0..self.m).map(|k| self.lap[j * self.m + k] * u[k]).sum())
            .collect()
    }

    /// `sigma(-4 Delta u + R u) - 2u log u - 2n u`.
    fn el0(&self, u: &[f64]) -> Vec<f64> {
        let lu = self.lap_apply(u);
        (0..self.m)
            .map(|j| self.sigma * (-4.0 * lu[j] + self.r[j] * u[j]) - 2.0 * u[j] * u[j].ln() - 2.0 * self.n * u[j])
            .collect()
    }

    fn mass(&self, u: &[f64]) -> f64 {
        self.c * self.dv.iter().zip(u).map(|(w, v)| w * v * v).sum::<f64>()
    }

    fn project(&self, u: &mut [f64]) {
        for v in u.iter_mut() {
            *v = v.max(U_FLOOR);
        }
        let s = self.mass(u).sqrt();
        for v in u.iter_mut() {
            *v /= s;
        }
    }

    /// Rayleigh multiplier and sup-norm residual of the Euler-Lagrange equation.
    fn residual(&self, u: &[f64]) -> (f64, f64) {
        let e = self.el0(u);
        let num: f64 = (0..self.m).map(|j| self.dv[j] * u[j] * e[j]).sum();
        let den: f64 = (0..self.m).map(|j| self.dv[j] * u[j] * u[j]).sum();
        let mu = num / den;
        let res = (0..self.m).map(|j| (e[j] - mu * u[j]).abs()).fold(0.0, f64::max);
        (mu, res)
    }

    fn w(&self, u: &[f64]) -> f64 {
        w_u(&self.geo, u, self.sigma).value
    }

    fn flow_matrix(&self, tau: f64) -> nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn> {
        let mut a = DMatrix::<f64>::identity(self.m, self.m);
        for j in 0..self.m {
            for k in 0..self.m {
                a[(j, k)] -= 4.0 * self.sigma * tau * self.lap[j * self.m + k];
            }
        }
        a.lu()
    }

    fn flow_step(&self, u: &[f64], tau: f64, lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>) -> Option<Vec<f64>> {
        let rhs = DVector::from_iterator(
            self.m,
            (0..self.m).map(|j| {
                u[j] + tau * (-self.sigma * self.r[j] * u[j] + 2.0 * u[j] * u[j].ln() + (2.0 * self.n + 1.0) * u[j])
            }),
        );
        let mut v: Vec<f64> = lu.solve(&rhs)?.iter().copied().collect();
        if !v.iter().all(|x| x.is_finite()) {
            return None;
        }
        self.project(&mut v);
        Some(v)
    }

    /// One damped Newton step on `(u, mu)`; `None` if the linear system is singular.
    fn newton_step(&self, u: &[f64], mu: f64) -> Option<(Vec<f64>, f64)> {
        let m = self.m;
        let mut a = DMatrix::<f64>::zeros(m + 1, m + 1);
        for j in 0..m {
            for k in 0..m {
                a[(j, k)] = -4.0 * self.sigma * self.lap[j * m + k];
            }
            a[(j, j)] += self.sigma * self.r[j] - 2.0 * u[j].ln() - 2.0 - 2.0 * self.n - mu;
            a[(j, m)] = -u[j];
            a[(m, j)] = 2.0 * self.c * self.dv[j] * u[j];
        }
        let e = self.el0(u);
        let mut b = DVector::<f64>::zeros(m + 1);
        for j in 0..m {
            b[j] = -(e[j] - mu * u[j]);
        }
        b[m] = -(self.mass(u) - 1.0);
        let d = a.lu().solve(&b)?;
        let (_, r0) = self.residual(u);
        let mut step = 1.0;
        for _ in 0..12 {
            let mut v: Vec<f64> = (0..m).map(|j| u[j] + step * d[j]).collect();
            if v.iter().all(|x| *x > 0.0) {
                self.project(&mut v);
                let (mu_v, r) = self.residual(&v);
                if r < r0 {
                    return Some((v, mu_v));
                }
            }
            step *= 0.5;
        }
        None
    }

    fn variation_check(&self, u: &[f64]) -> f64 {
        // smooth direction vanishing nowhere identically; W is differentiated without projection
        let xi = match &self.geo {
            Geo::Radial(g) => g.grid.xi().to_vec(),
            Geo::Periodic { .. } => unreachable!(),
        };
        let h: Vec<f64> = xi.iter().zip(u).map(|(x, v)| v * (1.5 * x).cos()).collect();
        let eps = 1e-5;
        let up: Vec<f64> = u.iter().zip(&h).map(|(a, b)| a + eps * b).collect();
        let um: Vec<f64> = u.iter().zip(&h).map(|(a, b)| a - eps * b).collect();
        let fd = (self.w(&up) - self.w(&um)) / (2.0 * eps);
        let e = self.el0(u);
        let analytic = 2.0 * self.c * (0..self.m).map(|j| self.dv[j] * (e[j] - u[j]) * h[j]).sum::<f64>();
        (fd - analytic).abs() / analytic.abs().max(fd.abs()).max(1e-12)
    }
}

pub fn mu_entropy(query: &EntropyQuery) -> Result<EntropyResult> {
    if !(query.sigma > 0.0) {
        return Err(FunctionalError::Unsupported(format!("sigma = {} must be positive", query.sigma)));
    }
    let p = Problem::new(&query.metric, query.sigma)?;
    let mut u = match &query.init {
        InitPolicy::Constant => vec![1.0; p.m],
        InitPolicy::Given(v) if v.len() == p.m => v.clone(),
        InitPolicy::Given(v) => {
            return Err(FunctionalError::Unsupported(format!("initial guess has {} of {} nodes", v.len(), p.m)))
        }
    };
    p.project(&mut u);
    let mut iterations = 0;
    let (mut mu, mut res) = p.residual(&u);
    let mut w = p.w(&u);
    let mut tau: f64 = 0.1;
    let mut newton_from = NEWTON_SWITCH;
    let mut cache: HashMap<u64, nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>> = HashMap::new();
    while res > query.tolerance && iterations < query.max_iterations {
        if res < newton_from {
            let mut stalled = false;
            while res > query.tolerance && iterations < query.max_iterations {
                iterations += 1;
                match p.newton_step(&u, mu) {
                    Some((v, mu_v)) => {
                        u = v;
                        mu = mu_v;
                        res = p.residual(&u).1;
                    }
                    None => {
                        stalled = true;
                        break;
                    }
                }
            }
            if !stalled {
                break;
            }
            newton_from = 0.5 * res;
        }
        iterations += 1;
        let lu = cache.entry(tau.to_bits()).or_insert_with(|| p.flow_matrix(tau));
        match p.flow_step(&u, tau, lu) {
            Some(v) => {
                let wv = p.w(&v);
                if wv <= w + 1e-15 * w.abs() {
                    u = v;
                    w = wv;
                    (mu, res) = p.residual(&u);
                    tau = (tau * 1.5).min(10.0);
                } else {
                    tau *= 0.5;
                }
            }
            None => tau *= 0.5,
        }
        if tau < 1e-14 {
            break;
        }
    }
    if res > query.tolerance {
        return Err(FunctionalError::NoConvergence {
            iterations,
            best_residual: res,
        });
    }
    let wv = w_u(&p.geo, &u, query.sigma);
    Ok(EntropyResult {
        w: wv.value,
        mu: wv.value,
        el_multiplier: mu,
        variation_check: p.variation_check(&u),
        u,
        el_residual: res,
        constraint_error: wv.constraint_error,
        iterations,
    })
}

/// `mu(g, sigma)` for a radial metric with default tolerances.
pub fn mu(metric: &HermitianMetricField, sigma: f64) -> Result<EntropyResult> {
    let m = metric
        .as_radial()
        .ok_or_else(|| FunctionalError::Unsupported("entropy minimization runs on radial profiles".into()))?;
    mu_entropy(&EntropyQuery::new(m.clone(), sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::w::w_functional_u;
    use kahler_kernel::{RadialGrid, ScalarField};
    use kahler_models::{bump_profile, fubini_study, radial_metric};
    use std::sync::Arc;

    fn bumped(n: usize, eps: f64) -> HermitianMetricField {
        let grid = Arc::new(RadialGrid::new(n, 48).unwrap());
        radial_metric(&bump_profile(grid, eps).unwrap()).unwrap()
    }

    #[test]
    fn fubini_study_cp1_at_unit_scale() {
        let r = mu(&fubini_study(1, 32).unwrap(), 1.0).unwrap();
        assert!((r.mu + 1.0).abs() < 1e-10, "{}", r.mu);
        assert!(r.el_residual < 1e-8);
    }

    #[test]
    fn perturbed_minimizer_is_below_constant_and_consistent() {
        for n in 1..=2 {
            let g = bumped(n, 0.25);
            let r = mu(&g, 1.0).unwrap();
            let grid = g.grid();
            let mut c = vec![1.0; grid.len()];
            let p = Problem::new(g.as_radial().unwrap(), 1.0).unwrap();
            p.project(&mut c);
            let w_const = w_functional_u(&g, &ScalarField::from_real(&grid, &c).unwrap(), 1.0).unwrap();
            assert!(r.mu <= w_const.value + 1e-12, "n={n}: {} > {}", r.mu, w_const.value);
            assert!(r.el_residual < 1e-8);
            assert!(r.constraint_error.abs() < 1e-12);
            assert!(r.u.iter().all(|v| *v > 0.0));
            assert!((r.el_multiplier - r.mu).abs() < 1e-8, "n={n}: {} vs {}", r.el_multiplier, r.mu);
            assert!(r.variation_check < 1e-6, "n={n}: {}", r.variation_check);
        }
    }

    #[test]
    fn small_scale_is_nontrivial() {
        // at small sigma the minimizer concentrates and W differs from the constant value
        let g = bumped(1, 0.2);
        let r = mu(&g, 0.3).unwrap();
        let spread = r.u.iter().cloned().fold(f64::MIN, f64::max) - r.u.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread > 1e-3);
        assert!(r.iterations > 0);
    }

    #[test]
    fn scaling_invariance() {
        let g = bumped(2, 0.2);
        let a = mu(&g, 0.7).unwrap();
        let scaled = HermitianMetricField::Radial(g.as_radial().unwrap().scaled(3.0));
        let b = mu(&scaled, 2.1).unwrap();
        assert!((a.mu - b.mu).abs() < 1e-8);
    }

    #[test]
    fn budget_doubling_on_fubini_study() {
        let fs = fubini_study(2, 32).unwrap();
        let m = fs.as_radial().unwrap().clone();
        let mut q = EntropyQuery::new(m, 1.0);
        let a = mu_entropy(&q).unwrap();
        q.max_iterations *= 2;
        let b = mu_entropy(&q).unwrap();
        assert!((a.mu - b.mu).abs() < 1e-6);
    }

    #[test]
    fn starved_budget_reports_no_convergence() {
        let g = bumped(1, 0.3);
        let mut q = EntropyQuery::new(g.as_radial().unwrap().clone(), 0.3);
        q.max_iterations = 1;
        assert!(matches!(mu_entropy(&q), Err(FunctionalError::NoConvergence { .. })));
    }
}
