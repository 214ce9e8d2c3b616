//! Scalar and tensor fields sampled on a chart grid.

use num_complex::Complex64 as C64;

use crate::error::{KernelError, Result};
use crate::grid::ChartGrid;

/// Kind of a tensor slot. Only lower indices are differentiated; upper ones are
/// accepted for storage but rejected by covariant operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IndexKind {
    Holo,
    AntiHolo,
    UpperHolo,
    UpperAntiHolo,
}

pub const MAX_RANK: usize = 5;

#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grid: ChartGrid,
    pub values: Vec<C64>,
}

impl ScalarField {
    pub fn from_real(grid: &ChartGrid, values: &[f64]) -> Result<Self> {
        check_len(grid, values.len())?;
        Ok(ScalarField {
            grid: grid.clone(),
            values: values.iter().map(|&x| C64::new(x, 0.0)).collect(),
        })
    }

    pub fn from_complex(grid: &ChartGrid, values: Vec<C64>) -> Result<Self> {
        check_len(grid, values.len())?;
        Ok(ScalarField {
            grid: grid.clone(),
            values,
        })
    }

    pub fn constant(grid: &ChartGrid, c: f64) -> Self {
        ScalarField {
            grid: grid.clone(),
            values: vec![C64::new(c, 0.0); grid.len()],
        }
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    /// Real part, provided the imaginary residual is below `tol`.
    pub fn real(&self, tol: f64) -> Option<Vec<f64>> {
        (self.max_imag() <= tol).then(|| self.values.iter().map(|v| v.re).collect())
    }

    pub fn real_part(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }
}

fn check_len(grid: &ChartGrid, len: usize) -> Result<()> {
    if len != grid.len() {
        return Err(KernelError::GridMismatch(format!(
            "{len} samples for a grid of {} nodes",
            grid.len()
        )));
    }
    Ok(())
}

/// Tensor with lower/upper holomorphic and antiholomorphic slots.
///
/// Components are node-major; within a node the first slot is most significant.
#[derive(Debug, Clone)]
pub struct TensorField {
    pub grid: ChartGrid,
    pub valence: Vec<IndexKind>,
    pub comps: Vec<C64>,
}

impl TensorField {
    pub fn new(grid: &ChartGrid, valence: Vec<IndexKind>, comps: Vec<C64>) -> Result<Self> {
        if valence.len() > MAX_RANK {
            return Err(KernelError::UnsupportedValence(valence));
        }
        let per = grid.complex_dim().pow(valence.len() as u32);
        if comps.len() != per * grid.len() {
            return Err(KernelError::GridMismatch(format!(
                "{} components, expected {}",
                comps.len(),
                per * grid.len()
            )));
        }
        Ok(TensorField {
            grid: grid.clone(),
            valence,
            comps,
        })
    }

    pub fn zeros(grid: &ChartGrid, valence: Vec<IndexKind>) -> Self {
        let per = grid.complex_dim().pow(valence.len() as u32);
        TensorField {
            grid: grid.clone(),
            comps: vec![C64::new(0.0, 0.0); per * grid.len()],
            valence,
        }
    }

    pub fn rank(&self) -> usize {
        self.valence.len()
    }

    pub fn per_node(&self) -> usize {
        self.grid.complex_dim().pow(self.rank() as u32)
    }

    pub fn node(&self, node: usize) -> &[C64] {
        let p = self.per_node();
        &self.comps[node * p..(node + 1) * p]
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        flat(self.grid.complex_dim(), idx)
    }

    pub fn get(&self, node: usize, idx: &[usize]) -> C64 {
        self.node(node)[self.flat_index(idx)]
    }

    /// Component `idx` as a field over the grid.
    pub fn component(&self, idx: &[usize]) -> Vec<C64> {
        let p = self.per_node();
        let k = self.flat_index(idx);
        (0..self.grid.len()).map(|i| self.comps[i * p + k]).collect()
    }

    pub fn max_abs_diff(&self, other: &TensorField) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

pub fn flat(n: usize, idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &i| acc * n + i)
}

/// Multi-index for flat offset `k` of a rank-`rank` tensor in dimension `n`.
pub fn unflat(n: usize, rank: usize, mut k: usize) -> Vec<usize> {
    let mut idx = vec![0; rank];
    for slot in (0..rank).rev() {
        idx[slot] = k % n;
        k /= n;
    }
    idx
}

/// Squared norm of a lower-index tensor at one node, contracting each slot with the
/// inverse metric `ginv[p][q] = g^{p qbar}`.
pub fn norm2_at(n: usize, valence: &[IndexKind], t: &[C64], ginv: &[C64]) -> f64 {
    let rank = valence.len();
    let per = n.pow(rank as u32);
    let mut acc = C64::new(0.0, 0.0);
    for a in 0..per {
        let ia = unflat(n, rank, a);
        for b in 0..per {
            let ib = unflat(n, rank, b);
            let mut w = C64::new(1.0, 0.0);
            for (s, kind) in valence.iter().enumerate() {
                // T_{..i..} conj(T_{..p..}): a holomorphic slot pairs g^{i pbar},
                // an antiholomorphic slot j̄ pairs g^{q jbar}
                let f = match kind {
                    IndexKind::Holo => ginv[ia[s] * n + ib[s]],
                    IndexKind::AntiHolo => ginv[ib[s] * n + ia[s]],
                    _ => unreachable!("norms are defined for lower indices"),
                };
                w *= f;
                if w == C64::new(0.0, 0.0) {
                    break;
                }
            }
            acc += w * t[a] * t[b].conj();
        }
    }
    acc.re
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_and_unflat_are_inverse() {
        for k in 0..16 {
            assert_eq!(flat(2, &unflat(2, 4, k)), k);
        }
    }

    #[test]
    fn norm_with_identity_metric_is_sum_of_squares() {
        let t: Vec<C64> = (0..4).map(|k| C64::new(k as f64, 1.0)).collect();
        let id = [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        let got = norm2_at(2, &[IndexKind::Holo, IndexKind::AntiHolo], &t, &id);
        let want: f64 = t.iter().map(|c| c.norm_sqr()).sum();
        assert!((got - want).abs() < 1e-14);
    }
}
