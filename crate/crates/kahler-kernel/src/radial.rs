//! U(n)-invariant metrics on CP^n in the compactified radial variable.
//!
//! With `s = log|z|^2` and `xi = tanh(s/2)`, a Kahler potential `psi(s)` has profile
//! `u = psi'(s)` and `w = u'(s)`. The metric is stored through
//! `beta = log(u/u_FS)` on Chebyshev-Gauss-Lobatto nodes. In the orthonormal frame of
//! the Fubini-Study metric the metric is `diag(e^rho, e^beta, ..., e^beta)` with
//! `rho = log(w/w_FS) = beta + log(1 + (1+xi) beta')`, primes meaning `d/dxi`.
//! Node 0 is `z = 0`, node N is the point at infinity.

use std::sync::Arc;

use crate::cheb::{self, ChebFft};
use crate::error::{KernelError, Result};
use crate::grid::{Closure, Topology};

/// Positivity floor relative to the median metric eigenvalue.
pub const POSITIVITY_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RadialBackend {
    /// Dense collocation matrices.
    #[default]
    Collocation,
    /// Chebyshev coefficient recurrence evaluated by FFT.
    Recurrence,
}

impl RadialBackend {
    pub fn other(self) -> Self {
        match self {
            RadialBackend::Collocation => RadialBackend::Recurrence,
            RadialBackend::Recurrence => RadialBackend::Collocation,
        }
    }
}

#[derive(Debug)]
pub struct RadialGrid {
    n: usize,
    degree: usize,
    topology: Topology,
    xi: Vec<f64>,
    q: Vec<f64>,
    weights: Vec<f64>,
    bary: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    fft: ChebFft,
}

impl RadialGrid {
    pub fn new(n: usize, degree: usize) -> Result<Self> {
        Self::with_topology(n, degree, Topology::RadialCpn)
    }

    /// The rotationally symmetric two-sphere, i.e. CP^1 read as a real surface.
    pub fn sphere(degree: usize) -> Self {
        Self::with_topology(1, degree, Topology::FullSphereProfile).expect("n = 1 is supported")
    }

    fn with_topology(n: usize, degree: usize, topology: Topology) -> Result<Self> {
        if !(1..=2).contains(&n) {
            return Err(KernelError::UnsupportedDimension(n));
        }
        let xi = cheb::nodes(degree);
        let q = xi.iter().map(|x| 1.0 - x * x).collect();
        let d1 = cheb::diff_matrix(degree);
        let d2 = cheb::matmul(&d1, &d1, degree + 1);
        Ok(RadialGrid {
            n,
            degree,
            topology,
            q,
            weights: cheb::clenshaw_curtis(degree),
            bary: cheb::barycentric_weights(degree),
            fft: ChebFft::new(degree),
            xi,
            d1,
            d2,
        })
    }

    pub fn complex_dim(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.degree + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn closure(&self) -> Closure {
        Closure {
            origin_order: self.degree,
            infinity_order: self.degree,
        }
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    /// `1 - xi^2` at the nodes.
    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn diff_matrix(&self) -> &[f64] {
        &self.d1
    }

    pub fn diff2_matrix(&self) -> &[f64] {
        &self.d2
    }

    /// Class constant: `u` ranges over `(0, n+1)` for metrics in `pi c_1(CP^n)`.
    pub fn class_constant(&self) -> f64 {
        (self.n + 1) as f64
    }

    pub fn u_fs(&self) -> Vec<f64> {
        let c = self.class_constant();
        self.xi.iter().map(|x| 0.5 * c * (1.0 + x)).collect()
    }

    pub fn w_fs(&self) -> Vec<f64> {
        let c = self.class_constant();
        self.q.iter().map(|q| 0.25 * c * q).collect()
    }

    pub fn deriv(&self, f: &[f64], backend: RadialBackend) -> Vec<f64> {
        match backend {
            RadialBackend::Collocation => cheb::matvec(&self.d1, f),
            RadialBackend::Recurrence => self.fft.derivative(f),
        }
    }

    pub fn deriv2(&self, f: &[f64], backend: RadialBackend) -> Vec<f64> {
        match backend {
            RadialBackend::Collocation => cheb::matvec(&self.d2, f),
            RadialBackend::Recurrence => self.fft.derivative(&self.fft.derivative(f)),
        }
    }

    /// `int_{-1}^{1} f dxi` by Clenshaw-Curtis.
    pub fn quad(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        cheb::interpolate(&self.xi, &self.bary, values, x)
    }

    /// Constant in the volume density, `pi^n/(n-1)! (n+1)/2`; `(n-1)! = 1` for n <= 2.
    fn volume_constant(&self) -> f64 {
        std::f64::consts::PI.powi(self.n as i32) * 0.5 * self.class_constant()
    }
}

/// Radial metric data `beta = log(u/u_FS)` plus class label.
#[derive(Debug, Clone)]
pub struct RadialMetric {
    pub grid: Arc<RadialGrid>,
    pub beta: Vec<f64>,
    pub class_tag: String,
}

pub fn class_tag(n: usize) -> String {
    format!("pi*c1(CP^{n})")
}

impl RadialMetric {
    pub fn new(grid: Arc<RadialGrid>, beta: Vec<f64>) -> Result<Self> {
        if beta.len() != grid.len() {
            return Err(KernelError::GridMismatch(format!(
                "{} profile samples for {} nodes",
                beta.len(),
                grid.len()
            )));
        }
        let tag = class_tag(grid.complex_dim());
        Ok(RadialMetric {
            grid,
            beta,
            class_tag: tag,
        })
    }

    pub fn fubini_study(grid: Arc<RadialGrid>) -> Self {
        let zeros = vec![0.0; grid.len()];
        RadialMetric::new(grid, zeros).expect("lengths match")
    }

    /// The metric `c * g`. Scaling leaves the FS-frame structure intact: `beta -> beta + log c`.
    pub fn scaled(&self, c: f64) -> Self {
        let lc = c.ln();
        RadialMetric {
            grid: self.grid.clone(),
            beta: self.beta.iter().map(|b| b + lc).collect(),
            class_tag: if (c - 1.0).abs() < 1e-15 {
                self.class_tag.clone()
            } else {
                format!("{c}*{}", self.class_tag)
            },
        }
    }

    /// Profile `u = psi'(s)`.
    pub fn profile(&self) -> Vec<f64> {
        self.grid
            .u_fs()
            .iter()
            .zip(&self.beta)
            .map(|(u, b)| u * b.exp())
            .collect()
    }

    pub fn geometry(&self, backend: RadialBackend) -> Result<RadialGeometry> {
        RadialGeometry::new(self.grid.clone(), &self.beta, backend)
    }

    /// Largest FS-frame component difference `max |e^{rho_a} - e^{rho_b}|, |e^{beta_a} - e^{beta_b}|`.
    pub fn sup_distance(&self, other: &RadialMetric, backend: RadialBackend) -> Result<f64> {
        let a = self.geometry(backend)?;
        let b = other.geometry(backend)?;
        Ok(a.e_rad
            .iter()
            .zip(&b.e_rad)
            .chain(a.e_tan.iter().zip(&b.e_tan))
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max))
    }
}

/// Derivatives and frame data of a radial metric, computed with one backend.
#[derive(Debug, Clone)]
pub struct RadialGeometry {
    pub grid: Arc<RadialGrid>,
    pub backend: RadialBackend,
    pub beta: Vec<f64>,
    pub dbeta: Vec<f64>,
    pub rho: Vec<f64>,
    pub drho: Vec<f64>,
    pub d2rho: Vec<f64>,
    /// `psi = log det` relative to FS: `rho + (n-1) beta`.
    pub dpsi: Vec<f64>,
    pub d2psi: Vec<f64>,
    pub e_rad: Vec<f64>,
    pub e_tan: Vec<f64>,
    /// Kahler volume density per unit `dxi`.
    pub vol_density: Vec<f64>,
}

/// Orthonormal-frame curvature of a radial metric: radial and tangential holomorphic
/// sectional curvatures and the mixed term `R(e_0, e_0, e_1, e_1)`.
#[derive(Debug, Clone)]
pub struct FrameCurvature {
    pub k_rad: Vec<f64>,
    pub k_tan: Vec<f64>,
    pub mixed: Vec<f64>,
}

fn positivity_check(e_rad: &[f64], e_tan: &[f64], n: usize) -> Result<()> {
    let mut all: Vec<f64> = e_rad.to_vec();
    if n > 1 {
        all.extend_from_slice(e_tan);
    }
    for (i, v) in all.iter().enumerate() {
        if !v.is_finite() {
            return Err(KernelError::NonPositive {
                node: i % e_rad.len(),
                min_eig: f64::NAN,
                floor: 0.0,
            });
        }
    }
    let mut sorted = all.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let floor = POSITIVITY_FLOOR * sorted[sorted.len() / 2].abs();
    for (i, &v) in all.iter().enumerate() {
        if v <= floor {
            return Err(KernelError::NonPositive {
                node: i % e_rad.len(),
                min_eig: v,
                floor,
            });
        }
    }
    Ok(())
}

/// `rho` from `beta`; `None` where the radial eigenvalue is not positive.
fn rho_from_beta(xi: &[f64], beta: &[f64], dbeta: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let arg: Vec<f64> = xi
        .iter()
        .zip(dbeta)
        .map(|(x, db)| 1.0 + (1.0 + x) * db)
        .collect();
    let e_rad = beta.iter().zip(&arg).map(|(b, a)| b.exp() * a).collect();
    let rho = beta
        .iter()
        .zip(&arg)
        .map(|(b, a)| if *a > 0.0 { b + a.ln() } else { f64::NAN })
        .collect();
    (rho, e_rad)
}

impl RadialGeometry {
    pub fn new(grid: Arc<RadialGrid>, beta: &[f64], backend: RadialBackend) -> Result<Self> {
        let n = grid.complex_dim();
        let dbeta = grid.deriv(beta, backend);
        let (rho, e_rad) = rho_from_beta(grid.xi(), beta, &dbeta);
        let e_tan: Vec<f64> = beta.iter().map(|b| b.exp()).collect();
        positivity_check(&e_rad, &e_tan, n)?;
        let drho = grid.deriv(&rho, backend);
        let d2rho = grid.deriv2(&rho, backend);
        let nm1 = (n - 1) as f64;
        let psi: Vec<f64> = rho.iter().zip(beta).map(|(r, b)| r + nm1 * b).collect();
        let (dpsi, d2psi) = if n == 1 {
            (drho.clone(), d2rho.clone())
        } else {
            (grid.deriv(&psi, backend), grid.deriv2(&psi, backend))
        };
        let c = grid.volume_constant();
        let ufs = grid.u_fs();
        let vol_density = psi
            .iter()
            .zip(&ufs)
            .map(|(p, u)| c * u.powi(n as i32 - 1) * p.exp())
            .collect();
        Ok(RadialGeometry {
            beta: beta.to_vec(),
            grid,
            backend,
            dbeta,
            rho,
            drho,
            d2rho,
            dpsi,
            d2psi,
            e_rad,
            e_tan,
            vol_density,
        })
    }

    pub fn complex_dim(&self) -> usize {
        self.grid.complex_dim()
    }

    fn np1(&self) -> f64 {
        self.grid.class_constant()
    }

    pub fn frame_curvature(&self) -> FrameCurvature {
        let xi = self.grid.xi();
        let q = self.grid.q();
        let np1 = self.np1();
        let len = xi.len();
        let mut k_rad = Vec::with_capacity(len);
        let mut k_tan = Vec::with_capacity(len);
        let mut mixed = Vec::with_capacity(len);
        for j in 0..len {
            let er = (-self.rho[j]).exp();
            let et = (-self.beta[j]).exp();
            k_rad.push(
                er * (2.0 / np1)
                    * (1.0 - (0.5 * q[j] * self.d2rho[j] - xi[j] * self.drho[j])),
            );
            k_tan.push(2.0 * et * (1.0 - (1.0 - xi[j]) * self.dbeta[j]) / np1);
            mixed.push(et * (1.0 + (1.0 - xi[j]) * (self.dbeta[j] - self.drho[j])) / np1);
        }
        FrameCurvature {
            k_rad,
            k_tan,
            mixed,
        }
    }

    /// Ricci eigenvalues `(radial, tangential)` from the frame curvature.
    pub fn ricci(&self) -> (Vec<f64>, Vec<f64>) {
        let fc = self.frame_curvature();
        if self.complex_dim() == 1 {
            return (fc.k_rad.clone(), fc.k_rad);
        }
        let rad = fc.k_rad.iter().zip(&fc.mixed).map(|(a, m)| a + m).collect();
        let tan = fc.k_tan.iter().zip(&fc.mixed).map(|(a, m)| a + m).collect();
        (rad, tan)
    }

    /// Ricci eigenvalues `(radial, tangential)` from `-d dbar log det g`.
    ///
    /// On CP^1 there is no tangential direction; the radial value is returned twice,
    /// as in [`RadialGeometry::ricci`]. The flow right-hand side uses [`ricci_tangential`].
    pub fn ricci_logdet(&self) -> (Vec<f64>, Vec<f64>) {
        let xi = self.grid.xi();
        let q = self.grid.q();
        let np1 = self.np1();
        let rad: Vec<f64> = (0..xi.len())
            .map(|j| {
                (-self.rho[j]).exp()
                    * (1.0 - (2.0 / np1) * (0.5 * q[j] * self.d2psi[j] - xi[j] * self.dpsi[j]))
            })
            .collect();
        let tan: Vec<f64> = (0..xi.len())
            .map(|j| (-self.beta[j]).exp() * (1.0 - (1.0 - xi[j]) * self.dpsi[j] / np1))
            .collect();
        if self.complex_dim() == 1 {
            return (rad.clone(), rad);
        }
        (rad, tan)
    }

    pub fn scalar_curvature(&self) -> Vec<f64> {
        let (rad, tan) = self.ricci();
        if self.complex_dim() == 1 {
            return rad;
        }
        rad.iter().zip(&tan).map(|(a, b)| a + b).collect()
    }

    pub fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        let df = self.grid.deriv(f, self.backend);
        let d2f = self.grid.deriv2(f, self.backend);
        self.laplacian_from(&df, &d2f)
    }

    pub fn laplacian_from(&self, df: &[f64], d2f: &[f64]) -> Vec<f64> {
        let (rad, tan) = self.ddbar_from(df, d2f);
        let nm1 = (self.complex_dim() - 1) as f64;
        rad.iter().zip(&tan).map(|(r, t)| r + nm1 * t).collect()
    }

    /// Collocation matrix of the Laplacian on radial functions, row-major.
    pub fn laplacian_matrix(&self) -> Vec<f64> {
        let m = self.grid.len();
        let xi = self.grid.xi();
        let q = self.grid.q();
        let np1 = self.np1();
        let nm1 = (self.complex_dim() - 1) as f64;
        let d1 = self.grid.diff_matrix();
        let d2 = self.grid.diff2_matrix();
        let mut out = vec![0.0; m * m];
        for j in 0..m {
            let a = q[j] * (-self.rho[j]).exp() / np1;
            let b = (-2.0 * xi[j] * (-self.rho[j]).exp() + nm1 * (1.0 - xi[j]) * (-self.beta[j]).exp()) / np1;
            for k in 0..m {
                out[j * m + k] = a * d2[j * m + k] + b * d1[j * m + k];
            }
        }
        out
    }

    /// Frame components `(radial, tangential)` of `d dbar f` for a radial function.
    pub fn ddbar(&self, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let df = self.grid.deriv(f, self.backend);
        let d2f = self.grid.deriv2(f, self.backend);
        self.ddbar_from(&df, &d2f)
    }

    fn ddbar_from(&self, df: &[f64], d2f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let xi = self.grid.xi();
        let q = self.grid.q();
        let np1 = self.np1();
        let rad = (0..xi.len())
            .map(|j| (2.0 / np1) * (-self.rho[j]).exp() * (0.5 * q[j] * d2f[j] - xi[j] * df[j]))
            .collect();
        let tan = (0..xi.len())
            .map(|j| (1.0 - xi[j]) * df[j] * (-self.beta[j]).exp() / np1)
            .collect();
        (rad, tan)
    }

    /// `|grad f|^2 = g^{i jbar} f_i f_jbar`.
    pub fn grad_norm2(&self, f: &[f64]) -> Vec<f64> {
        let df = self.grid.deriv(f, self.backend);
        self.grad_norm2_from(&df)
    }

    pub fn grad_norm2_from(&self, df: &[f64]) -> Vec<f64> {
        let q = self.grid.q();
        let np1 = self.np1();
        (0..q.len())
            .map(|j| q[j] * df[j] * df[j] * (-self.rho[j]).exp() / np1)
            .collect()
    }

    /// `|nabla nabla f|^2` of the (2,0) Hessian; only the radial component survives.
    pub fn hess20_norm2(&self, f: &[f64]) -> Vec<f64> {
        let df = self.grid.deriv(f, self.backend);
        let d2f = self.grid.deriv2(f, self.backend);
        let q = self.grid.q();
        let np1 = self.np1();
        (0..q.len())
            .map(|j| {
                let h = q[j] / np1 * (-self.rho[j]).exp() * (d2f[j] - self.drho[j] * df[j]);
                h * h
            })
            .collect()
    }

    /// Holomorphic radial derivative `f_s = (q/2) f'`, i.e. `(z d/dz) f`.
    pub fn radial_derivative(&self, f: &[f64]) -> Vec<f64> {
        let df = self.grid.deriv(f, self.backend);
        df.iter()
            .zip(self.grid.q())
            .map(|(d, q)| 0.5 * q * d)
            .collect()
    }

    /// `int f omega^[n]`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.grid
            .weights()
            .iter()
            .zip(&self.vol_density)
            .zip(f)
            .map(|((w, v), x)| w * v * x)
            .sum()
    }

    /// Kahler volume `int omega^[n]`.
    pub fn volume(&self) -> f64 {
        self.grid.quad(&self.vol_density)
    }

    /// Kahler volume of the region `{xi' <= xi}` around `z = 0`: `pi^n u^n / n!`.
    pub fn ball_volume_from_origin(&self) -> Vec<f64> {
        let n = self.complex_dim();
        let fact = if n == 2 { 2.0 } else { 1.0 };
        self.grid
            .u_fs()
            .iter()
            .zip(&self.beta)
            .map(|(u, b)| std::f64::consts::PI.powi(n as i32) * (u * b.exp()).powi(n as i32) / fact)
            .collect()
    }

    /// Smallest metric eigenvalue relative to the FS frame at each node.
    pub fn min_eigenvalue(&self) -> Vec<f64> {
        if self.complex_dim() == 1 {
            return self.e_rad.clone();
        }
        self.e_rad
            .iter()
            .zip(&self.e_tan)
            .map(|(a, b)| a.min(*b))
            .collect()
    }
}

/// Tangential Ricci eigenvalue only, with the two derivatives the flow needs.
pub fn ricci_tangential(grid: &RadialGrid, beta: &[f64], backend: RadialBackend) -> Result<Vec<f64>> {
    let n = grid.complex_dim();
    let xi = grid.xi();
    let dbeta = grid.deriv(beta, backend);
    let (rho, e_rad) = rho_from_beta(xi, beta, &dbeta);
    let e_tan: Vec<f64> = beta.iter().map(|b| b.exp()).collect();
    positivity_check(&e_rad, &e_tan, n)?;
    let nm1 = (n - 1) as f64;
    let psi: Vec<f64> = rho.iter().zip(beta).map(|(r, b)| r + nm1 * b).collect();
    let dpsi = grid.deriv(&psi, backend);
    let np1 = grid.class_constant();
    Ok((0..xi.len())
        .map(|j| (-beta[j]).exp() * (1.0 - (1.0 - xi[j]) * dpsi[j] / np1))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn bump(grid: &RadialGrid, eps: f64) -> Vec<f64> {
        // beta for u = u_FS + eps q^2 (1+xi), i.e. u/u_FS = 1 + 2 eps q^2/(n+1)
        let c = 2.0 * eps / grid.class_constant();
        grid.xi()
            .iter()
            .map(|x| {
                let q = 1.0 - x * x;
                (1.0 + c * q * q).ln()
            })
            .collect()
    }

    fn max_abs(v: &[f64]) -> f64 {
        v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    #[test]
    fn fubini_study_cp1_is_round() {
        let g = Arc::new(RadialGrid::new(1, 64).unwrap());
        let geo = RadialMetric::fubini_study(g).geometry(RadialBackend::Collocation).unwrap();
        assert!(max_abs(&geo.scalar_curvature().iter().map(|r| r - 1.0).collect::<Vec<_>>()) < 1e-12);
        assert!((geo.volume() - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn fubini_study_cp2_frame_values() {
        let g = Arc::new(RadialGrid::new(2, 48).unwrap());
        let geo = RadialMetric::fubini_study(g).geometry(RadialBackend::Collocation).unwrap();
        let fc = geo.frame_curvature();
        for j in 0..geo.beta.len() {
            assert!((fc.k_rad[j] - 2.0 / 3.0).abs() < 1e-12);
            assert!((fc.k_tan[j] - 2.0 / 3.0).abs() < 1e-12);
            assert!((fc.mixed[j] - 1.0 / 3.0).abs() < 1e-12);
        }
        assert!((geo.volume() - 4.5 * PI * PI).abs() < 1e-10);
    }

    #[test]
    fn ricci_routes_agree_on_perturbed_metric() {
        for n in 1..=2 {
            let g = Arc::new(RadialGrid::new(n, 96).unwrap());
            let beta = bump(&g, 0.2);
            let geo = RadialGeometry::new(g, &beta, RadialBackend::Collocation).unwrap();
            let (r1, t1) = geo.ricci();
            let (r2, t2) = geo.ricci_logdet();
            let e = r1.iter().zip(&r2).chain(t1.iter().zip(&t2)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(e < 1e-9, "n={n}: {e}");
        }
    }

    #[test]
    fn backends_agree() {
        let g = Arc::new(RadialGrid::new(2, 128).unwrap());
        let beta = bump(&g, 0.3);
        let a = RadialGeometry::new(g.clone(), &beta, RadialBackend::Collocation).unwrap();
        let b = RadialGeometry::new(g, &beta, RadialBackend::Recurrence).unwrap();
        let ra = a.scalar_curvature();
        let rb = b.scalar_curvature();
        let e = ra.iter().zip(&rb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(e < 1e-8, "{e}");
    }

    #[test]
    fn average_scalar_curvature_is_n() {
        for n in 1..=2 {
            let g = Arc::new(RadialGrid::new(n, 96).unwrap());
            let beta = bump(&g, 0.25);
            let geo = RadialGeometry::new(g, &beta, RadialBackend::Collocation).unwrap();
            let avg = geo.integrate(&geo.scalar_curvature()) / geo.volume();
            assert!((avg - n as f64).abs() < 1e-10, "n={n}: {avg}");
        }
    }

    #[test]
    fn laplacian_obeys_product_rule_and_divergence_theorem() {
        let g = Arc::new(RadialGrid::new(2, 80).unwrap());
        let beta = bump(&g, 0.2);
        let geo = RadialGeometry::new(g.clone(), &beta, RadialBackend::Collocation).unwrap();
        let f: Vec<f64> = g.xi().iter().map(|x| (1.3 * x).sin() + x * x).collect();
        let f2: Vec<f64> = f.iter().map(|v| v * v).collect();
        let lf = geo.laplacian(&f);
        let lf2 = geo.laplacian(&f2);
        let gn = geo.grad_norm2(&f);
        for j in 0..f.len() {
            assert!((lf2[j] - 2.0 * f[j] * lf[j] - 2.0 * gn[j]).abs() < 1e-9);
        }
        assert!(geo.integrate(&lf).abs() < 1e-10);
    }

    #[test]
    fn laplacian_matrix_matches_operator() {
        let g = Arc::new(RadialGrid::new(2, 40).unwrap());
        let geo = RadialGeometry::new(g.clone(), &bump(&g, 0.2), RadialBackend::Collocation).unwrap();
        let f: Vec<f64> = g.xi().iter().map(|x| (2.0 * x).cos()).collect();
        let a = geo.laplacian(&f);
        let b = cheb::matvec(&geo.laplacian_matrix(), &f);
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-10));
    }

    #[test]
    fn ball_volume_reaches_total() {
        let g = Arc::new(RadialGrid::new(2, 64).unwrap());
        let beta = bump(&g, 0.2);
        let geo = RadialGeometry::new(g, &beta, RadialBackend::Collocation).unwrap();
        let v = geo.ball_volume_from_origin();
        assert!((v.last().unwrap() - geo.volume()).abs() < 1e-10);
        assert!(v[0].abs() < 1e-14);
    }

    #[test]
    fn folded_metric_is_rejected() {
        let g = Arc::new(RadialGrid::new(1, 32).unwrap());
        // u decreasing somewhere: w < 0
        let beta: Vec<f64> = g.xi().iter().map(|x| -3.0 * (1.0 + x) * (1.0 - x)).collect();
        let err = RadialGeometry::new(g, &beta, RadialBackend::Collocation).unwrap_err();
        assert!(matches!(err, KernelError::NonPositive { .. }));
    }
}
