//! Scalar curvature, volume measure, gradients and Laplacians of functions on either chart kind.

use kahler_kernel::curvature::{periodic_curvature, CurvaturePack, PeriodicConnection};
use kahler_kernel::metric::det_hermitian;
use kahler_kernel::{HermitianMetricField, PeriodicScheme, RadialBackend, RadialGeometry};

use crate::error::Result;

pub enum Geo {
    Radial(RadialGeometry),
    Periodic {
        pack: CurvaturePack,
        conn: PeriodicConnection,
        weight: f64,
    },
}

impl Geo {
    pub fn new(metric: &HermitianMetricField) -> Result<Self> {
        Ok(match metric {
            HermitianMetricField::Radial(m) => Geo::Radial(m.geometry(RadialBackend::Collocation)?),
            HermitianMetricField::Periodic(m) => {
                m.check_positive()?;
                let (pack, conn) = periodic_curvature(m, PeriodicScheme::Spectral);
                Geo::Periodic {
                    pack,
                    conn,
                    weight: m.grid.weight(),
                }
            }
        })
    }

    pub fn complex_dim(&self) -> usize {
        match self {
            Geo::Radial(g) => g.complex_dim(),
            Geo::Periodic { pack, .. } => pack.n,
        }
    }

    pub fn scalar(&self) -> Vec<f64> {
        match self {
            Geo::Radial(g) => g.scalar_curvature(),
            Geo::Periodic { pack, .. } => pack.scalar.clone(),
        }
    }

    /// Quadrature weight times volume density at each node, so `int f dV = sum f dv`.
    pub fn dv(&self) -> Vec<f64> {
        match self {
            Geo::Radial(g) => g.grid.weights().iter().zip(&g.vol_density).map(|(w, v)| w * v).collect(),
            Geo::Periodic { pack, weight, .. } => (0..pack.len)
                .map(|k| weight * det_hermitian(pack.n, pack.g_at(k)))
                .collect(),
        }
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.dv().iter().zip(f).map(|(w, v)| w * v).sum()
    }

    pub fn grad_norm2(&self, f: &[f64]) -> Vec<f64> {
        match self {
            Geo::Radial(g) => g.grad_norm2(f),
            Geo::Periodic { pack, conn, .. } => {
                let n = pack.n;
                let fc = kahler_kernel::periodic::to_complex(f);
                let d: Vec<Vec<_>> = (0..n).map(|p| conn.diff.dz(&fc, p)).collect();
                (0..pack.len)
                    .map(|k| {
                        let gi = pack.ginv_at(k);
                        let mut s = 0.0;
                        for p in 0..n {
                            for q in 0..n {
                                s += (gi[p * n + q] * d[p][k] * d[q][k].conj()).re;
                            }
                        }
                        s
                    })
                    .collect()
            }
        }
    }

    pub fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        match self {
            Geo::Radial(g) => g.laplacian(f),
            Geo::Periodic { pack, conn, .. } => {
                let n = pack.n;
                let fc = kahler_kernel::periodic::to_complex(f);
                let mut out = vec![0.0; pack.len];
                for q in 0..n {
                    let dq = conn.diff.dzb(&fc, q);
                    for p in 0..n {
                        let dpq = conn.diff.dz(&dq, p);
                        for k in 0..pack.len {
                            out[k] += (pack.ginv_at(k)[p * n + q] * dpq[k]).re;
                        }
                    }
                }
                out
            }
        }
    }
}
