//! Periodic charts `C^n / (2 pi Z)^{2n}` sampled on uniform tensor grids.
//!
//! Real axes are ordered `x_1, y_1, x_2, y_2`; axis `d` has stride `m^d`.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{KernelError, Result};

pub const PERIOD: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicGrid {
    n: usize,
    m: usize,
}

impl PeriodicGrid {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if !(1..=2).contains(&n) {
            return Err(KernelError::UnsupportedDimension(n));
        }
        assert!(m >= 4, "need at least four points per axis");
        Ok(PeriodicGrid { n, m })
    }

    pub fn complex_dim(&self) -> usize {
        self.n
    }

    pub fn points_per_axis(&self) -> usize {
        self.m
    }

    pub fn real_dim(&self) -> usize {
        2 * self.n
    }

    pub fn len(&self) -> usize {
        self.m.pow(self.real_dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        PERIOD / self.m as f64
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.m.pow(axis as u32)
    }

    /// Real coordinates of a node.
    pub fn coords(&self, node: usize) -> Vec<f64> {
        let h = self.spacing();
        (0..self.real_dim())
            .map(|d| ((node / self.stride(d)) % self.m) as f64 * h)
            .collect()
    }

    /// Uniform quadrature weight; weights sum to the flat reference volume `(2 pi)^{2n}`.
    pub fn weight(&self) -> f64 {
        self.spacing().powi(self.real_dim() as i32)
    }

    pub fn reference_volume(&self) -> f64 {
        PERIOD.powi(self.real_dim() as i32)
    }

    fn line_starts(&self, axis: usize) -> Vec<usize> {
        let s = self.stride(axis);
        (0..self.len())
            .filter(|&i| (i / s) % self.m == 0)
            .collect()
    }
}

/// Differentiation schemes for periodic data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeriodicScheme {
    /// Trigonometric (FFT) differentiation.
    Spectral,
    /// Centered finite differences with the given even order (2..=12).
    FiniteDifference(usize),
}

/// First-derivative operator along real axes.
pub struct PeriodicDiff {
    grid: PeriodicGrid,
    scheme: PeriodicScheme,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    stencil: Vec<f64>,
}

impl std::fmt::Debug for PeriodicDiff {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PeriodicDiff")
            .field("grid", &self.grid)
            .field("scheme", &self.scheme)
            .finish()
    }
}

/// Centered first-derivative weights `c_1..c_p` for `f'(x) ~ sum c_k (f(x+kh) - f(x-kh)) / h`.
fn central_weights(order: usize) -> Vec<f64> {
    assert!(order >= 2 && order % 2 == 0 && order <= 12, "FD order must be even, 2..=12");
    let p = order / 2;
    // Solve sum_k c_k 2 k^{2l+1} = delta_{l0} for l = 0..p-1 (Vandermonde in k^2).
    let mut a = nalgebra::DMatrix::<f64>::zeros(p, p);
    let mut b = nalgebra::DVector::<f64>::zeros(p);
    for l in 0..p {
        for k in 0..p {
            a[(l, k)] = 2.0 * ((k + 1) as f64).powi(2 * l as i32 + 1);
        }
    }
    b[0] = 1.0;
    let c = a.lu().solve(&b).expect("Vandermonde system is nonsingular");
    c.iter().copied().collect()
}

impl PeriodicDiff {
    pub fn new(grid: &PeriodicGrid, scheme: PeriodicScheme) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.m);
        let inverse = planner.plan_fft_inverse(grid.m);
        let stencil = match scheme {
            PeriodicScheme::Spectral => Vec::new(),
            PeriodicScheme::FiniteDifference(order) => central_weights(order),
        };
        PeriodicDiff {
            grid: grid.clone(),
            scheme,
            forward,
            inverse,
            stencil,
        }
    }

    pub fn scheme(&self) -> PeriodicScheme {
        self.scheme
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    fn line_derivative(&self, line: &mut [C64]) {
        let m = self.grid.m;
        match self.scheme {
            PeriodicScheme::Spectral => {
                self.forward.process(line);
                let scale = 1.0 / m as f64;
                for (k, c) in line.iter_mut().enumerate() {
                    // period 2 pi: wavenumbers are integers; the Nyquist mode is dropped
                    let kk = if 2 * k < m {
                        k as f64
                    } else if 2 * k == m {
                        0.0
                    } else {
                        k as f64 - m as f64
                    };
                    *c = *c * C64::new(0.0, kk * scale);
                }
                self.inverse.process(line);
            }
            PeriodicScheme::FiniteDifference(_) => {
                let h = self.grid.spacing();
                let src = line.to_vec();
                for (i, out) in line.iter_mut().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for (k, &c) in self.stencil.iter().enumerate() {
                        let s = k + 1;
                        acc += (src[(i + s) % m] - src[(i + m - s % m) % m]) * c;
                    }
                    *out = acc / h;
                }
            }
        }
    }

    /// Partial derivative along real axis `axis`.
    pub fn d_axis(&self, f: &[C64], axis: usize) -> Vec<C64> {
        let m = self.grid.m;
        let s = self.grid.stride(axis);
        let starts = self.grid.line_starts(axis);
        let lines: Vec<Vec<C64>> = starts
            .par_iter()
            .map(|&base| {
                let mut line: Vec<C64> = (0..m).map(|j| f[base + j * s]).collect();
                self.line_derivative(&mut line);
                line
            })
            .collect();
        let mut out = vec![C64::new(0.0, 0.0); f.len()];
        for (base, line) in starts.iter().zip(lines) {
            for (j, v) in line.into_iter().enumerate() {
                out[base + j * s] = v;
            }
        }
        out
    }

    /// Holomorphic derivative `d/dz^k = (d/dx_k - i d/dy_k)/2`.
    pub fn dz(&self, f: &[C64], k: usize) -> Vec<C64> {
        let dx = self.d_axis(f, 2 * k);
        let dy = self.d_axis(f, 2 * k + 1);
        dx.iter()
            .zip(&dy)
            .map(|(a, b)| (a - C64::i() * b) * 0.5)
            .collect()
    }

    /// Antiholomorphic derivative `d/dzbar^k = (d/dx_k + i d/dy_k)/2`.
    pub fn dzb(&self, f: &[C64], k: usize) -> Vec<C64> {
        let dx = self.d_axis(f, 2 * k);
        let dy = self.d_axis(f, 2 * k + 1);
        dx.iter()
            .zip(&dy)
            .map(|(a, b)| (a + C64::i() * b) * 0.5)
            .collect()
    }
}

pub fn to_complex(f: &[f64]) -> Vec<C64> {
    f.iter().map(|&x| C64::new(x, 0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wave(grid: &PeriodicGrid, k: &[f64]) -> (Vec<C64>, Vec<Vec<C64>>) {
        let f: Vec<C64> = (0..grid.len())
            .map(|i| {
                let x = grid.coords(i);
                let ph: f64 = x.iter().zip(k).map(|(a, b)| a * b).sum();
                C64::new(ph.sin(), 0.0)
            })
            .collect();
        let d = (0..grid.real_dim())
            .map(|ax| {
                (0..grid.len())
                    .map(|i| {
                        let x = grid.coords(i);
                        let ph: f64 = x.iter().zip(k).map(|(a, b)| a * b).sum();
                        C64::new(k[ax] * ph.cos(), 0.0)
                    })
                    .collect()
            })
            .collect();
        (f, d)
    }

    #[test]
    fn spectral_derivative_is_exact_on_trig_modes() {
        let g = PeriodicGrid::new(1, 16).unwrap();
        let (f, d) = wave(&g, &[3.0, -2.0]);
        let op = PeriodicDiff::new(&g, PeriodicScheme::Spectral);
        for ax in 0..2 {
            let got = op.d_axis(&f, ax);
            let err = got
                .iter()
                .zip(&d[ax])
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-12, "axis {ax}: {err}");
        }
    }

    #[test]
    fn fd_weights_reproduce_known_stencils() {
        let c2 = central_weights(2);
        assert!((c2[0] - 0.5).abs() < 1e-15);
        let c4 = central_weights(4);
        assert!((c4[0] - 2.0 / 3.0).abs() < 1e-14 && (c4[1] + 1.0 / 12.0).abs() < 1e-14);
    }

    #[test]
    fn fd_converges_at_nominal_order() {
        let mut errs = Vec::new();
        for &m in &[16usize, 32] {
            let g = PeriodicGrid::new(1, m).unwrap();
            let (f, d) = wave(&g, &[2.0, 1.0]);
            let op = PeriodicDiff::new(&g, PeriodicScheme::FiniteDifference(4));
            let got = op.d_axis(&f, 0);
            errs.push(
                got.iter()
                    .zip(&d[0])
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max),
            );
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 3.8, "order {order}");
    }

    #[test]
    fn weights_sum_to_reference_volume() {
        let g = PeriodicGrid::new(2, 8).unwrap();
        let total = g.weight() * g.len() as f64;
        assert!((total - g.reference_volume()).abs() < 1e-9 * total);
    }
}
