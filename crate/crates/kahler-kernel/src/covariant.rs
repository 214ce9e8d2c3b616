//! Covariant derivatives and Laplacians on periodic charts.

use num_complex::Complex64 as C64;

use crate::curvature::PeriodicConnection;
use crate::error::{KernelError, Result};
use crate::grid::ChartGrid;
use crate::metric::HermitianMetricField;
use crate::periodic::PeriodicScheme;
use crate::radial::RadialBackend;
use crate::tensor::{unflat, IndexKind, ScalarField, TensorField, MAX_RANK};

fn check_valence(t: &TensorField) -> Result<()> {
    if t.rank() + 1 > MAX_RANK
        || t.valence
            .iter()
            .any(|k| matches!(k, IndexKind::UpperHolo | IndexKind::UpperAntiHolo))
    {
        return Err(KernelError::UnsupportedValence(t.valence.clone()));
    }
    Ok(())
}

impl PeriodicConnection {
    /// `nabla_p T` (direction `Holo`) or `nabla_pbar T` (direction `AntiHolo`); the new
    /// index is appended as the last slot.
    pub fn covariant(&self, t: &TensorField, direction: IndexKind) -> Result<TensorField> {
        check_valence(t)?;
        let n = self.n;
        let rank = t.rank();
        let per = t.per_node();
        let mut valence = t.valence.clone();
        valence.push(direction);
        let mut out = TensorField::zeros(&t.grid, valence);
        let out_per = per * n;
        let holo = match direction {
            IndexKind::Holo => true,
            IndexKind::AntiHolo => false,
            _ => return Err(KernelError::UnsupportedValence(vec![direction])),
        };
        for a in 0..per {
            let comp: Vec<C64> = (0..self.len).map(|node| t.comps[node * per + a]).collect();
            for p in 0..n {
                let d = if holo {
                    self.diff.dz(&comp, p)
                } else {
                    self.diff.dzb(&comp, p)
                };
                for (node, v) in d.into_iter().enumerate() {
                    out.comps[node * out_per + a * n + p] = v;
                }
            }
        }
        // Christoffel corrections only hit slots of the same type as the direction
        let slot_kind = if holo { IndexKind::Holo } else { IndexKind::AntiHolo };
        let slots: Vec<usize> = (0..rank).filter(|&s| t.valence[s] == slot_kind).collect();
        if slots.is_empty() {
            return Ok(out);
        }
        for node in 0..self.len {
            let tn = &t.comps[node * per..(node + 1) * per];
            for a in 0..per {
                let idx = unflat(n, rank, a);
                for p in 0..n {
                    let mut corr = C64::new(0.0, 0.0);
                    for &s in &slots {
                        let mut j = idx.clone();
                        for m in 0..n {
                            j[s] = m;
                            let b = j.iter().fold(0, |acc, &i| acc * n + i);
                            let gam = self.gamma_at(node, m, p, idx[s]);
                            corr += if holo { gam } else { gam.conj() } * tn[b];
                        }
                    }
                    out.comps[node * out_per + a * n + p] -= corr;
                }
            }
        }
        Ok(out)
    }

    /// `(1/2) g^{k lbar} (nabla_k nabla_lbar + nabla_lbar nabla_k) T`.
    pub fn laplacian(&self, t: &TensorField) -> Result<TensorField> {
        if t.rank() + 2 > MAX_RANK {
            return Err(KernelError::UnsupportedValence(t.valence.clone()));
        }
        let n = self.n;
        let per = t.per_node();
        // a = nabla_k nabla_lbar T stored at [.., l, k]; b = nabla_lbar nabla_k T at [.., k, l]
        let a = self.covariant(&self.covariant(t, IndexKind::AntiHolo)?, IndexKind::Holo)?;
        let b = self.covariant(&self.covariant(t, IndexKind::Holo)?, IndexKind::AntiHolo)?;
        let mut out = TensorField::zeros(&t.grid, t.valence.clone());
        let nn = n * n;
        for node in 0..self.len {
            let gi = self.ginv_at(node);
            for c in 0..per {
                let mut s = C64::new(0.0, 0.0);
                for k in 0..n {
                    for l in 0..n {
                        let w = gi[k * n + l];
                        s += w * (a.comps[(node * per + c) * nn + l * n + k]
                            + b.comps[(node * per + c) * nn + k * n + l]);
                    }
                }
                out.comps[node * per + c] = 0.5 * s;
            }
        }
        Ok(out)
    }
}

fn connection(metric: &HermitianMetricField, scheme: PeriodicScheme) -> Result<PeriodicConnection> {
    match metric {
        HermitianMetricField::Periodic(m) => Ok(PeriodicConnection::new(m, scheme)),
        HermitianMetricField::Radial(_) => Err(KernelError::GridMismatch(
            "tensor calculus on radial profiles is limited to invariant functions".into(),
        )),
    }
}

pub fn covariant_derivative(
    t: &TensorField,
    metric: &HermitianMetricField,
    direction: IndexKind,
) -> Result<TensorField> {
    if !t.grid.same_as(&metric.grid()) {
        return Err(KernelError::GridMismatch("tensor and metric grids differ".into()));
    }
    connection(metric, PeriodicScheme::Spectral)?.covariant(t, direction)
}

pub fn tensor_laplacian(t: &TensorField, metric: &HermitianMetricField) -> Result<TensorField> {
    if !t.grid.same_as(&metric.grid()) {
        return Err(KernelError::GridMismatch("tensor and metric grids differ".into()));
    }
    connection(metric, PeriodicScheme::Spectral)?.laplacian(t)
}

/// Scalar Laplacian `g^{i jbar} d_i d_jbar f` on either kind of grid.
pub fn laplacian(f: &ScalarField, metric: &HermitianMetricField) -> Result<ScalarField> {
    if !f.grid.same_as(&metric.grid()) {
        return Err(KernelError::GridMismatch("function and metric grids differ".into()));
    }
    match metric {
        HermitianMetricField::Radial(m) => {
            let geo = m.geometry(RadialBackend::Collocation)?;
            ScalarField::from_real(&f.grid, &geo.laplacian(&f.real_part()))
        }
        HermitianMetricField::Periodic(_) => {
            let t = TensorField::new(&f.grid, vec![], f.values.clone())?;
            let lap = tensor_laplacian(&t, metric)?;
            ScalarField::from_complex(&f.grid, lap.comps)
        }
    }
}

/// Scalar field as a rank-0 tensor on a chart grid.
pub fn scalar_tensor(grid: &ChartGrid, values: Vec<C64>) -> Result<TensorField> {
    TensorField::new(grid, vec![], values)
}
