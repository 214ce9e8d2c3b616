//! Residuals of the gradient soliton equations
//! `R_{i jbar} = lambda g_{i jbar} - d_i d_jbar f`, `nabla_i nabla_j f = 0`, and of the
//! expanding form `R_{i jbar} + g_{i jbar}/t = nabla_i V_jbar`, `nabla_i V_j = 0`, `V = grad f`.

use kahler_kernel::curvature::{periodic_curvature, CurvaturePack, PeriodicConnection};
use kahler_kernel::tensor::norm2_at;
use kahler_kernel::{HermitianMetricField, IndexKind, PeriodicMetric, PeriodicScheme, RadialBackend, ScalarField};
use num_complex::Complex64 as C64;

use crate::error::Result;

const H: IndexKind = IndexKind::Holo;
const A: IndexKind = IndexKind::AntiHolo;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolitonResidual {
    /// Sup over nodes of the g-norm of the (1,1) equation.
    pub kahler: f64,
    /// Sup over nodes of `|nabla nabla f|`.
    pub holomorphy: f64,
}

/// Potential `f = zbar^T A z + p(x)` on a periodic chart, with `A` Hermitian and `p` periodic.
#[derive(Debug, Clone)]
pub struct QuadraticPotential {
    /// Row-major `n x n`.
    pub a: Vec<C64>,
    pub periodic: Vec<f64>,
}

struct Derivs {
    d1: Vec<Vec<C64>>,
    /// `d_i d_j f` at `[i][j]`.
    d20: Vec<Vec<Vec<C64>>>,
    /// `d_i d_jbar f` at `[i][j]`.
    d11: Vec<Vec<Vec<C64>>>,
}

fn periodic_derivs(conn: &PeriodicConnection, p: &[f64]) -> Derivs {
    let n = conn.n;
    let pc = kahler_kernel::periodic::to_complex(p);
    let d1: Vec<Vec<C64>> = (0..n).map(|i| conn.diff.dz(&pc, i)).collect();
    let db: Vec<Vec<C64>> = (0..n).map(|j| conn.diff.dzb(&pc, j)).collect();
    let d20 = (0..n).map(|i| (0..n).map(|j| conn.diff.dz(&d1[j], i)).collect()).collect();
    let d11 = (0..n).map(|i| (0..n).map(|j| conn.diff.dz(&db[j], i)).collect()).collect();
    Derivs { d1, d20, d11 }
}

fn residuals(pack: &CurvaturePack, conn: &PeriodicConnection, d: &Derivs, lambda: f64) -> SolitonResidual {
    let n = pack.n;
    let mut kahler = 0.0f64;
    let mut holo = 0.0f64;
    for node in 0..pack.len {
        let g = pack.g_at(node);
        let gi = pack.ginv_at(node);
        let mut e = vec![C64::new(0.0, 0.0); n * n];
        let mut b = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                e[i * n + j] = pack.ricci_at(node, i, j) - lambda * g[i * n + j] + d.d11[i][j][node];
                let mut h = d.d20[i][j][node];
                for k in 0..n {
                    h -= conn.gamma_at(node, k, i, j) * d.d1[k][node];
                }
                b[i * n + j] = h;
            }
        }
        kahler = kahler.max(norm2_at(n, &[H, A], &e, gi).sqrt());
        holo = holo.max(norm2_at(n, &[H, H], &b, gi).sqrt());
    }
    SolitonResidual { kahler, holomorphy: holo }
}

pub fn soliton_residual(metric: &HermitianMetricField, f: &ScalarField, lambda: f64) -> Result<SolitonResidual> {
    let fv = f.real_part();
    match metric {
        HermitianMetricField::Radial(m) => {
            let geo = m.geometry(RadialBackend::Collocation)?;
            let (rr, rt) = geo.ricci();
            let (hr, ht) = geo.ddbar(&fv);
            let h2 = geo.hess20_norm2(&fv);
            let nm1 = (geo.complex_dim() - 1) as f64;
            let kahler = (0..fv.len())
                .map(|j| {
                    let a = rr[j] - lambda + hr[j];
                    let b = rt[j] - lambda + ht[j];
                    (a * a + nm1 * b * b).sqrt()
                })
                .fold(0.0, f64::max);
            let holomorphy = h2.iter().map(|v| v.sqrt()).fold(0.0, f64::max);
            Ok(SolitonResidual { kahler, holomorphy })
        }
        HermitianMetricField::Periodic(m) => {
            m.check_positive()?;
            let (pack, conn) = periodic_curvature(m, PeriodicScheme::Spectral);
            let d = periodic_derivs(&conn, &fv);
            Ok(residuals(&pack, &conn, &d, lambda))
        }
    }
}

/// Residual of the expanding soliton system at time `t` for `f = zbar^T A z + p`.
pub fn expanding_soliton_residual(metric: &PeriodicMetric, f: &QuadraticPotential, t: f64) -> Result<SolitonResidual> {
    metric.check_positive()?;
    let (pack, conn) = periodic_curvature(metric, PeriodicScheme::Spectral);
    let n = pack.n;
    let mut d = periodic_derivs(&conn, &f.periodic);
    let grid = &metric.grid;
    for node in 0..pack.len {
        let x = grid.coords(node);
        let z: Vec<C64> = (0..n).map(|k| C64::new(x[2 * k], x[2 * k + 1])).collect();
        for i in 0..n {
            // d_i (zbar_k A_kl z_l) = sum_k zbar_k A_ki; d_i d_jbar = A_ji
            let g: C64 = (0..n).map(|k| z[k].conj() * f.a[k * n + i]).sum();
            d.d1[i][node] += g;
            for j in 0..n {
                d.d11[i][j][node] += f.a[j * n + i];
            }
        }
    }
    // R + g/t - d dbar f is the lambda = -1/t soliton residual with the sign of f flipped
    for i in 0..n {
        for j in 0..n {
            for v in d.d11[i][j].iter_mut() {
                *v = -*v;
            }
        }
    }
    Ok(residuals(&pack, &conn, &d, -1.0 / t))
}
