use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{KernelError, Result};
use crate::grid::ChartGrid;
use crate::periodic::{to_complex, PeriodicDiff, PeriodicGrid, PeriodicScheme};
use crate::radial::{RadialBackend, RadialMetric, POSITIVITY_FLOOR};
use crate::tensor::ScalarField;

/// Hermitian metric components `g_{i jbar}` on a periodic chart, row `i`, column `j`.
#[derive(Debug, Clone)]
pub struct PeriodicMetric {
    pub grid: Arc<PeriodicGrid>,
    pub comps: Vec<C64>,
    pub class_tag: String,
}

pub const FLAT_TAG: &str = "flat";

/// Inverse in the convention `ginv[p][q] = g^{p qbar}`, i.e. the transpose of `G^{-1}`.
pub fn inverse_hermitian(n: usize, g: &[C64]) -> Vec<C64> {
    match n {
        1 => vec![g[0].inv()],
        2 => {
            let det = g[0] * g[3] - g[1] * g[2];
            // G^{-1} = [[d, -b], [-c, a]]/det, transposed
            vec![g[3] / det, -g[2] / det, -g[1] / det, g[0] / det]
        }
        _ => unreachable!("dimension checked at construction"),
    }
}

pub fn det_hermitian(n: usize, g: &[C64]) -> f64 {
    match n {
        1 => g[0].re,
        2 => (g[0] * g[3] - g[1] * g[2]).re,
        _ => unreachable!("dimension checked at construction"),
    }
}

/// Eigenvalues of a Hermitian matrix of size 1 or 2, ascending.
pub fn eig_hermitian(n: usize, g: &[C64]) -> Vec<f64> {
    match n {
        1 => vec![g[0].re],
        2 => {
            let a = g[0].re;
            let d = g[3].re;
            let m = 0.5 * (a + d);
            let r = (0.25 * (a - d) * (a - d) + g[1].norm_sqr()).sqrt();
            vec![m - r, m + r]
        }
        _ => unreachable!("dimension checked at construction"),
    }
}

impl PeriodicMetric {
    pub fn flat(grid: Arc<PeriodicGrid>) -> Self {
        let n = grid.complex_dim();
        let mut comps = vec![C64::new(0.0, 0.0); grid.len() * n * n];
        for node in comps.chunks_exact_mut(n * n) {
            for i in 0..n {
                node[i * n + i] = C64::new(1.0, 0.0);
            }
        }
        PeriodicMetric {
            grid,
            comps,
            class_tag: FLAT_TAG.to_string(),
        }
    }

    /// Checks positivity against the floor; Hermitian symmetry is the caller's job.
    pub fn new(grid: Arc<PeriodicGrid>, comps: Vec<C64>, class_tag: &str) -> Result<Self> {
        let n = grid.complex_dim();
        if comps.len() != grid.len() * n * n {
            return Err(KernelError::GridMismatch(format!(
                "{} metric components for {} nodes",
                comps.len(),
                grid.len()
            )));
        }
        let m = PeriodicMetric {
            grid,
            comps,
            class_tag: class_tag.to_string(),
        };
        m.check_positive()?;
        Ok(m)
    }

    pub fn complex_dim(&self) -> usize {
        self.grid.complex_dim()
    }

    pub fn at(&self, node: usize) -> &[C64] {
        let nn = self.complex_dim().pow(2);
        &self.comps[node * nn..(node + 1) * nn]
    }

    pub fn inverse_at(&self, node: usize) -> Vec<C64> {
        inverse_hermitian(self.complex_dim(), self.at(node))
    }

    pub fn component(&self, i: usize, j: usize) -> Vec<C64> {
        let n = self.complex_dim();
        self.comps.chunks_exact(n * n).map(|g| g[i * n + j]).collect()
    }

    pub fn hermitian_residual(&self) -> f64 {
        let n = self.complex_dim();
        let mut worst: f64 = 0.0;
        for g in self.comps.chunks_exact(n * n) {
            for i in 0..n {
                for j in 0..n {
                    worst = worst.max((g[i * n + j] - g[j * n + i].conj()).norm());
                }
            }
        }
        worst
    }

    pub fn check_positive(&self) -> Result<()> {
        let n = self.complex_dim();
        let eigs: Vec<Vec<f64>> = self
            .comps
            .chunks_exact(n * n)
            .map(|g| eig_hermitian(n, g))
            .collect();
        let mut all: Vec<f64> = eigs.iter().flatten().copied().collect();
        if all.iter().any(|v| !v.is_finite()) {
            let node = eigs.iter().position(|e| e.iter().any(|v| !v.is_finite())).unwrap_or(0);
            return Err(KernelError::NonPositive {
                node,
                min_eig: f64::NAN,
                floor: 0.0,
            });
        }
        all.sort_by(|a, b| a.total_cmp(b));
        let floor = POSITIVITY_FLOOR * all[all.len() / 2].abs();
        for (node, e) in eigs.iter().enumerate() {
            if e[0] <= floor {
                return Err(KernelError::NonPositive {
                    node,
                    min_eig: e[0],
                    floor,
                });
            }
        }
        Ok(())
    }

    /// Kahler closedness `max |d_k g_{i jbar} - d_i g_{k jbar}|`.
    pub fn kahler_residual(&self, diff: &PeriodicDiff) -> f64 {
        let n = self.complex_dim();
        if n == 1 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                for k in (i + 1)..n {
                    let a = diff.dz(&self.component(i, j), k);
                    let b = diff.dz(&self.component(k, j), i);
                    for (x, y) in a.iter().zip(&b) {
                        worst = worst.max((x - y).norm());
                    }
                }
            }
        }
        worst
    }
}

/// A sampled Kahler metric with its background class.
#[derive(Debug, Clone)]
pub enum HermitianMetricField {
    Periodic(PeriodicMetric),
    Radial(RadialMetric),
}

impl HermitianMetricField {
    pub fn grid(&self) -> ChartGrid {
        match self {
            HermitianMetricField::Periodic(m) => ChartGrid::Periodic(m.grid.clone()),
            HermitianMetricField::Radial(m) => ChartGrid::Radial(m.grid.clone()),
        }
    }

    pub fn complex_dim(&self) -> usize {
        self.grid().complex_dim()
    }

    pub fn class_tag(&self) -> &str {
        match self {
            HermitianMetricField::Periodic(m) => &m.class_tag,
            HermitianMetricField::Radial(m) => &m.class_tag,
        }
    }

    pub fn as_radial(&self) -> Option<&RadialMetric> {
        match self {
            HermitianMetricField::Radial(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_periodic(&self) -> Option<&PeriodicMetric> {
        match self {
            HermitianMetricField::Periodic(m) => Some(m),
            _ => None,
        }
    }

    /// Metric at a node. Radial metrics report their FS-frame components.
    pub fn components_at(&self, node: usize) -> Result<Vec<C64>> {
        match self {
            HermitianMetricField::Periodic(m) => Ok(m.at(node).to_vec()),
            HermitianMetricField::Radial(m) => {
                let geo = m.geometry(RadialBackend::Collocation)?;
                let n = m.grid.complex_dim();
                let mut g = vec![C64::new(0.0, 0.0); n * n];
                g[0] = C64::new(geo.e_rad[node], 0.0);
                if n == 2 {
                    g[3] = C64::new(geo.e_tan[node], 0.0);
                }
                Ok(g)
            }
        }
    }

    /// Smallest eigenvalue at each node (FS-frame values for radial metrics).
    pub fn min_eigenvalues(&self) -> Result<Vec<f64>> {
        match self {
            HermitianMetricField::Periodic(m) => {
                let n = m.complex_dim();
                Ok(m.comps
                    .chunks_exact(n * n)
                    .map(|g| eig_hermitian(n, g)[0])
                    .collect())
            }
            HermitianMetricField::Radial(m) => Ok(m.geometry(RadialBackend::Collocation)?.min_eigenvalue()),
        }
    }
}

/// `g~ + d dbar phi`.
///
/// Periodic potentials are differentiated spectrally. Radial potentials are functions of
/// the compactified variable with `u = u~ + d phi / ds`.
pub fn assemble_metric(
    background: &HermitianMetricField,
    potential: &ScalarField,
) -> Result<HermitianMetricField> {
    if !background.grid().same_as(&potential.grid) {
        return Err(KernelError::GridMismatch(
            "potential and background live on different grids".into(),
        ));
    }
    match background {
        HermitianMetricField::Periodic(m) => {
            let diff = PeriodicDiff::new(&m.grid, PeriodicScheme::Spectral);
            let n = m.complex_dim();
            let phi = to_complex(&potential.real_part());
            let mut comps = m.comps.clone();
            for j in 0..n {
                let dzb = diff.dzb(&phi, j);
                for i in 0..n {
                    let h = diff.dz(&dzb, i);
                    for (node, v) in h.iter().enumerate() {
                        comps[node * n * n + i * n + j] += v;
                    }
                }
            }
            // spectral d dbar of a real function is Hermitian up to roundoff
            for g in comps.chunks_exact_mut(n * n) {
                for i in 0..n {
                    g[i * n + i].im = 0.0;
                    for j in (i + 1)..n {
                        let avg = 0.5 * (g[i * n + j] + g[j * n + i].conj());
                        g[i * n + j] = avg;
                        g[j * n + i] = avg.conj();
                    }
                }
            }
            Ok(HermitianMetricField::Periodic(PeriodicMetric::new(
                m.grid.clone(),
                comps,
                &m.class_tag,
            )?))
        }
        HermitianMetricField::Radial(m) => {
            let grid = &m.grid;
            let np1 = grid.class_constant();
            let phi = potential.real_part();
            let dphi = grid.deriv(&phi, RadialBackend::Collocation);
            let mut beta = Vec::with_capacity(phi.len());
            for (node, ((b, dp), x)) in m.beta.iter().zip(&dphi).zip(grid.xi()).enumerate() {
                let ratio = b.exp() + (1.0 - x) * dp / np1;
                if ratio <= 0.0 || !ratio.is_finite() {
                    return Err(KernelError::NonPositive {
                        node,
                        min_eig: ratio,
                        floor: 0.0,
                    });
                }
                beta.push(ratio.ln());
            }
            let out = RadialMetric {
                grid: grid.clone(),
                beta,
                class_tag: m.class_tag.clone(),
            };
            out.geometry(RadialBackend::Collocation)?;
            Ok(HermitianMetricField::Radial(out))
        }
    }
}
