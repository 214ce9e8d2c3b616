//! `Tr(AC) >= |B|^2` for positive semidefinite block matrices `[[A, B], [B^T, C]]`,
//! and its Hermitian form `Tr(AC) >= |B|^2 + |D|^2`, sampled on seeded random matrices.

use kahler_kernel::C64;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EstimateError, Result};

/// Margins below `-MARGIN_TOL * scale` count as violations.
pub const MARGIN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceFamily {
    /// Real `G = X X^T` with `X` of random width: any real PSD block matrix.
    Real,
    /// Real PSD block matrices with `B` symmetric.
    RealSymmetric,
    /// Hermitian data from sums of squared moduli `|a.eta + b.zeta|^2` and `|a.eta + c.conj(zeta)|^2`,
    /// the quadratic forms with no `eta eta` or `zeta zeta` part.
    Complex,
}

impl TraceFamily {
    pub fn label(self) -> &'static str {
        match self {
            TraceFamily::Real => "real",
            TraceFamily::RealSymmetric => "real-symmetric",
            TraceFamily::Complex => "complex",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub family: TraceFamily,
    pub m: usize,
    pub samples: usize,
    /// Smallest `(Tr(AC) - |B|^2 - |D|^2) / scale` seen.
    pub worst_margin: f64,
    pub worst_sample: usize,
}

struct Sample {
    margin: f64,
    scale: f64,
    matrix: Vec<f64>,
}

fn gram(rng: &mut ChaCha8Rng, rows: usize, width: usize) -> DMatrix<f64> {
    let x = DMatrix::from_fn(rows, width, |_, _| rng.random_range(-1.0..1.0));
    &x * x.transpose()
}

fn real_margin(g: &DMatrix<f64>, m: usize) -> Sample {
    let a = g.view((0, 0), (m, m));
    let b = g.view((0, m), (m, m));
    let c = g.view((m, m), (m, m));
    let tr = (a * c).trace();
    let b2 = b.norm_squared();
    Sample {
        margin: tr - b2,
        scale: a.norm() * c.norm() + b2,
        matrix: g.transpose().as_slice().to_vec(),
    }
}

fn real_sample(rng: &mut ChaCha8Rng, m: usize) -> Sample {
    let width = rng.random_range(1..=2 * m);
    real_margin(&gram(rng, 2 * m, width), m)
}

fn symmetric_sample(rng: &mut ChaCha8Rng, m: usize) -> Sample {
    let r = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
    let b = (&r + r.transpose()) * 0.5;
    let eig = SymmetricEigen::new(b.clone());
    let abs = &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::abs)) * eig.eigenvectors.transpose();
    let wa = rng.random_range(1..=m);
    let wc = rng.random_range(1..=m);
    let a = &abs + gram(rng, m, wa) * rng.random_range(0.0..1.0);
    let c = &abs + gram(rng, m, wc) * rng.random_range(0.0..1.0);
    let mut g = DMatrix::zeros(2 * m, 2 * m);
    g.view_mut((0, 0), (m, m)).copy_from(&a);
    g.view_mut((0, m), (m, m)).copy_from(&b);
    g.view_mut((m, 0), (m, m)).copy_from(&b);
    g.view_mut((m, m), (m, m)).copy_from(&c);
    real_margin(&g, m)
}

fn cvec(rng: &mut ChaCha8Rng, m: usize) -> Vec<C64> {
    (0..m).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

fn complex_sample(rng: &mut ChaCha8Rng, m: usize) -> Sample {
    let z = C64::new(0.0, 0.0);
    let (mut a, mut b, mut c, mut d) = (vec![z; m * m], vec![z; m * m], vec![z; m * m], vec![z; m * m]);
    let terms = rng.random_range(1..=2 * m);
    for _ in 0..terms {
        let alpha = cvec(rng, m);
        let other = cvec(rng, m);
        let holomorphic = rng.random_bool(0.5);
        for k in 0..m {
            for l in 0..m {
                a[k * m + l] += alpha[k] * alpha[l].conj();
                if holomorphic {
                    // |alpha.eta + beta.zeta|^2
                    c[k * m + l] += other[k] * other[l].conj();
                    b[k * m + l] += alpha[k] * other[l].conj();
                } else {
                    // |alpha.eta + gamma.conj(zeta)|^2
                    c[k * m + l] += other[k].conj() * other[l];
                    d[k * m + l] += alpha[k] * other[l].conj();
                }
            }
        }
    }
    let tr: f64 = (0..m).flat_map(|k| (0..m).map(move |l| (k, l))).map(|(k, l)| (a[k * m + l] * c[l * m + k]).re).sum();
    let n2 = |x: &[C64]| x.iter().map(|v| v.norm_sqr()).sum::<f64>();
    let (b2, d2) = (n2(&b), n2(&d));
    let scale = (n2(&a) * n2(&c)).sqrt() + b2 + d2;
    let matrix = [a, b, c, d].iter().flatten().flat_map(|v| [v.re, v.im]).collect();
    Sample {
        margin: tr - b2 - d2,
        scale,
        matrix,
    }
}

/// Runs `samples` seeded draws and aborts at the first violation.
pub fn trace_inequality(samples: usize, seed: u64, m: usize, family: TraceFamily) -> Result<TraceReport> {
    if m == 0 {
        return Err(EstimateError::Unsupported("m must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((m as u64) << 32));
    let mut rep = TraceReport {
        family,
        m,
        samples,
        worst_margin: f64::INFINITY,
        worst_sample: 0,
    };
    for k in 0..samples {
        let s = match family {
            TraceFamily::Real => real_sample(&mut rng, m),
            TraceFamily::RealSymmetric => symmetric_sample(&mut rng, m),
            TraceFamily::Complex => complex_sample(&mut rng, m),
        };
        let rel = s.margin / s.scale.max(f64::MIN_POSITIVE);
        if rel < rep.worst_margin {
            rep.worst_margin = rel;
            rep.worst_sample = k;
        }
        if rel < -MARGIN_TOL {
            return Err(EstimateError::CounterexampleFound {
                family: family.label().into(),
                m,
                sample: k,
                margin: s.margin,
                matrix: s.matrix,
            });
        }
    }
    Ok(rep)
}

/// Margin `Tr(AC) - |B|^2` of an explicit real block matrix `[[A, B], [B^T, C]]` (row-major, `2m x 2m`).
pub fn block_margin(g: &[f64], m: usize) -> f64 {
    real_margin(&DMatrix::from_row_slice(2 * m, 2 * m, g), m).margin
}
