//! Residuals of the curvature symmetries, the Kahler Bianchi identities and the
//! commutation formulas for mixed covariant derivatives.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curvature::{curvature, periodic_curvature, CurvatureOptions, CurvaturePack, PeriodicConnection};
use crate::error::Result;
use crate::grid::ChartGrid;
use crate::metric::{HermitianMetricField, PeriodicMetric};
use crate::periodic::{PeriodicGrid, PeriodicScheme};
use crate::tensor::{IndexKind, TensorField};

use IndexKind::{AntiHolo as A, Holo as H};

/// Maximum absolute residual of each identity. `None` marks identities that do not
/// apply to the grid (tensor calculus is available on periodic charts only).
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub symmetry: f64,
    pub trace: f64,
    pub ricci_logdet: f64,
    pub hermitian: f64,
    pub kahler_closedness: f64,
    pub bianchi: Option<f64>,
    pub commutation_one_form: Option<f64>,
    pub commutation_two_tensor: Option<f64>,
    pub ricci_laplacian: Option<f64>,
    /// Largest `Rm` difference between the primary and the check scheme.
    pub backend_agreement: Option<f64>,
}

impl IdentityReport {
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        let mut out = vec![
            ("symmetry", self.symmetry),
            ("trace", self.trace),
            ("ricci_logdet", self.ricci_logdet),
            ("hermitian", self.hermitian),
            ("kahler_closedness", self.kahler_closedness),
        ];
        for (name, v) in [
            ("bianchi", self.bianchi),
            ("commutation_one_form", self.commutation_one_form),
            ("commutation_two_tensor", self.commutation_two_tensor),
            ("ricci_laplacian", self.ricci_laplacian),
            ("backend_agreement", self.backend_agreement),
        ] {
            if let Some(v) = v {
                out.push((name, v));
            }
        }
        out
    }

    pub fn worst(&self) -> (&'static str, f64) {
        self.entries()
            .into_iter()
            .fold(("none", 0.0), |acc, e| if e.1 > acc.1 || e.1.is_nan() { e } else { acc })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IdentityOptions {
    pub seed: u64,
    pub scheme: PeriodicScheme,
    pub check_scheme: Option<PeriodicScheme>,
}

impl Default for IdentityOptions {
    fn default() -> Self {
        IdentityOptions {
            seed: 17,
            scheme: PeriodicScheme::Spectral,
            check_scheme: Some(PeriodicScheme::FiniteDifference(10)),
        }
    }
}

pub fn identity_residuals(metric: &HermitianMetricField, opts: &IdentityOptions) -> Result<IdentityReport> {
    match metric {
        HermitianMetricField::Radial(_) => {
            let pack = curvature(metric, &CurvatureOptions::unchecked())?;
            let other_opts = CurvatureOptions {
                radial: crate::radial::RadialBackend::Recurrence,
                ..CurvatureOptions::unchecked()
            };
            let other = curvature(metric, &other_opts)?;
            Ok(IdentityReport {
                symmetry: pack.symmetry_residual(),
                trace: pack.trace_residual(),
                ricci_logdet: pack.ricci_consistency(),
                hermitian: 0.0,
                kahler_closedness: 0.0,
                bianchi: None,
                commutation_one_form: None,
                commutation_two_tensor: None,
                ricci_laplacian: None,
                backend_agreement: Some(pack.max_abs_rm_diff(&other).0),
            })
        }
        HermitianMetricField::Periodic(m) => periodic_identities(m, opts),
    }
}

fn max_norm(it: impl Iterator<Item = C64>) -> f64 {
    it.map(|v| v.norm()).fold(0.0, |a, b| if b.is_nan() { f64::NAN } else { a.max(b) })
}

/// Seeded band-limited complex field with wave numbers in `{-2..2}`.
fn random_field(grid: &PeriodicGrid, rng: &mut ChaCha8Rng) -> Vec<C64> {
    let d = grid.real_dim();
    let modes: Vec<(Vec<f64>, C64)> = (0..4)
        .map(|_| {
            let k: Vec<f64> = (0..d).map(|_| rng.random_range(-2i32..=2) as f64).collect();
            let c = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            (k, c)
        })
        .collect();
    (0..grid.len())
        .map(|node| {
            let x = grid.coords(node);
            modes
                .iter()
                .map(|(k, c)| {
                    let ph: f64 = k.iter().zip(&x).map(|(a, b)| a * b).sum();
                    c * C64::from_polar(1.0, ph)
                })
                .sum()
        })
        .collect()
}

fn random_tensor(grid: &ChartGrid, pg: &PeriodicGrid, valence: Vec<IndexKind>, rng: &mut ChaCha8Rng) -> TensorField {
    let n = pg.complex_dim();
    let per = n.pow(valence.len() as u32);
    let comps: Vec<Vec<C64>> = (0..per).map(|_| random_field(pg, rng)).collect();
    let flat: Vec<C64> = (0..pg.len())
        .flat_map(|node| comps.iter().map(move |c| c[node]).collect::<Vec<_>>())
        .collect();
    TensorField::new(grid, valence, flat).expect("sizes match")
}

fn periodic_identities(m: &PeriodicMetric, opts: &IdentityOptions) -> Result<IdentityReport> {
    let (pack, conn) = periodic_curvature(m, opts.scheme);
    let grid = ChartGrid::Periodic(m.grid.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let backend_agreement = opts
        .check_scheme
        .map(|s| pack.max_abs_rm_diff(&periodic_curvature(m, s).0).0);
    let rm = TensorField::new(&grid, vec![H, A, H, A], pack.rm.clone())?;
    let bianchi = bianchi_residual(&conn, &rm)?;
    let v1 = random_tensor(&grid, &m.grid, vec![H], &mut rng);
    let c17 = commutation_one_form(&conn, &pack, &v1)?;
    let v2 = random_tensor(&grid, &m.grid, vec![H, A], &mut rng);
    let c18 = commutation_two_tensor(&conn, &pack, &v2)?;
    let rl = ricci_laplacian_residual(&conn, &pack, &grid)?;
    Ok(IdentityReport {
        symmetry: pack.symmetry_residual(),
        trace: pack.trace_residual(),
        ricci_logdet: pack.ricci_consistency(),
        hermitian: m.hermitian_residual(),
        kahler_closedness: m.kahler_residual(&conn.diff),
        bianchi: Some(bianchi),
        commutation_one_form: Some(c17),
        commutation_two_tensor: Some(c18),
        ricci_laplacian: Some(rl),
        backend_agreement,
    })
}

/// `nabla_p R_{i jbar k lbar} = nabla_k R_{i jbar p lbar}` and the barred analogue.
pub fn bianchi_residual(conn: &PeriodicConnection, rm: &TensorField) -> Result<f64> {
    let n = conn.n;
    let dh = conn.covariant(rm, H)?;
    let da = conn.covariant(rm, A)?;
    let mut worst: f64 = 0.0;
    for node in 0..conn.len {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        for p in 0..n {
                            let a = dh.get(node, &[i, j, k, l, p]) - dh.get(node, &[i, j, p, l, k]);
                            let b = da.get(node, &[i, j, k, l, p]) - da.get(node, &[i, j, k, p, l]);
                            worst = worst.max(a.norm()).max(b.norm());
                        }
                    }
                }
            }
        }
    }
    Ok(worst)
}

/// `nabla_k nabla_jbar v_i - nabla_jbar nabla_k v_i + g^{p lbar} R_{k jbar i lbar} v_p`.
pub fn commutation_one_form(conn: &PeriodicConnection, pack: &CurvaturePack, v: &TensorField) -> Result<f64> {
    let n = conn.n;
    let a = conn.covariant(&conn.covariant(v, A)?, H)?; // [i, jbar, k]
    let b = conn.covariant(&conn.covariant(v, H)?, A)?; // [i, k, jbar]
    let mut res = Vec::new();
    for node in 0..conn.len {
        let gi = pack.ginv_at(node);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let lhs = a.get(node, &[i, j, k]) - b.get(node, &[i, k, j]);
                    let mut rhs = C64::new(0.0, 0.0);
                    for p in 0..n {
                        for l in 0..n {
                            rhs -= gi[p * n + l] * pack.rm_at(node, k, j, i, l) * v.get(node, &[p]);
                        }
                    }
                    res.push(lhs - rhs);
                }
            }
        }
    }
    Ok(max_norm(res.into_iter()))
}

/// `[nabla_k, nabla_lbar] v_{i jbar} = -g^{p qbar} R_{k lbar i qbar} v_{p jbar} + g^{m qbar} R_{k lbar m jbar} v_{i qbar}`.
pub fn commutation_two_tensor(conn: &PeriodicConnection, pack: &CurvaturePack, v: &TensorField) -> Result<f64> {
    let n = conn.n;
    let a = conn.covariant(&conn.covariant(v, A)?, H)?; // [i, jbar, lbar, k]
    let b = conn.covariant(&conn.covariant(v, H)?, A)?; // [i, jbar, k, lbar]
    let mut worst: f64 = 0.0;
    for node in 0..conn.len {
        let gi = pack.ginv_at(node);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let lhs = a.get(node, &[i, j, l, k]) - b.get(node, &[i, j, k, l]);
                        let mut rhs = C64::new(0.0, 0.0);
                        for p in 0..n {
                            for q in 0..n {
                                let w = gi[p * n + q];
                                rhs -= w * pack.rm_at(node, k, l, i, q) * v.get(node, &[p, j]);
                                rhs += w * pack.rm_at(node, k, l, p, j) * v.get(node, &[i, q]);
                            }
                        }
                        worst = worst.max((lhs - rhs).norm());
                    }
                }
            }
        }
    }
    Ok(worst)
}

/// `Delta R_{i jbar} = d_i d_jbar R - R_{i jbar k lbar} R^{l kbar} + R_{i abar} R^{abar}_{jbar}`.
pub fn ricci_laplacian_residual(conn: &PeriodicConnection, pack: &CurvaturePack, grid: &ChartGrid) -> Result<f64> {
    let n = conn.n;
    let ric = TensorField::new(grid, vec![H, A], pack.ricci.clone())?;
    let lap = conn.laplacian(&ric)?;
    let r: Vec<C64> = pack.scalar.iter().map(|&x| C64::new(x, 0.0)).collect();
    let mut hess = vec![vec![Vec::new(); n]; n];
    for (j, row) in (0..n).map(|j| (j, conn.diff.dzb(&r, j))).collect::<Vec<_>>().into_iter() {
        for (i, h) in hess.iter_mut().enumerate() {
            h[j] = conn.diff.dz(&row, i);
        }
    }
    let mut worst: f64 = 0.0;
    for node in 0..conn.len {
        let gi = pack.ginv_at(node);
        for i in 0..n {
            for j in 0..n {
                let mut rhs = hess[i][j][node];
                for k in 0..n {
                    for l in 0..n {
                        for a in 0..n {
                            for b in 0..n {
                                rhs -= pack.rm_at(node, i, j, k, l)
                                    * gi[k * n + a]
                                    * gi[b * n + l]
                                    * pack.ricci_at(node, b, a);
                            }
                        }
                    }
                }
                for a in 0..n {
                    for b in 0..n {
                        rhs += pack.ricci_at(node, i, a) * gi[b * n + a] * pack.ricci_at(node, b, j);
                    }
                }
                worst = worst.max((lap.get(node, &[i, j]) - rhs).norm());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::assemble_metric;
    use crate::radial::{RadialGrid, RadialMetric};
    use crate::tensor::ScalarField;
    use std::sync::Arc;

    fn wavy(n: usize, m: usize, amp: f64) -> HermitianMetricField {
        let pg = Arc::new(PeriodicGrid::new(n, m).unwrap());
        let flat = HermitianMetricField::Periodic(PeriodicMetric::flat(pg.clone()));
        let phi: Vec<f64> = (0..pg.len())
            .map(|i| {
                let x = pg.coords(i);
                let z2 = if n == 2 { (x[2] + x[1]).cos() - 0.7 * (x[3] - x[0]).sin() } else { 0.0 };
                amp * ((x[0] + x[1]).cos() + 0.6 * (2.0 * x[1] - x[0]).sin() + z2)
            })
            .collect();
        assemble_metric(&flat, &ScalarField::from_real(&flat.grid(), &phi).unwrap()).unwrap()
    }

    #[test]
    fn flat_residuals_vanish() {
        let pg = Arc::new(PeriodicGrid::new(2, 8).unwrap());
        let flat = HermitianMetricField::Periodic(PeriodicMetric::flat(pg));
        let rep = identity_residuals(&flat, &IdentityOptions::default()).unwrap();
        assert!(rep.worst().1 < 1e-12, "{:?}", rep.worst());
    }

    #[test]
    fn curved_chart_dimension_one() {
        let rep = identity_residuals(&wavy(1, 48, 0.05), &IdentityOptions::default()).unwrap();
        for (name, v) in rep.entries() {
            assert!(v < 1e-7, "{name}: {v}");
        }
    }

    #[test]
    fn curved_chart_dimension_two() {
        let opts = IdentityOptions {
            check_scheme: None,
            ..Default::default()
        };
        let rep = identity_residuals(&wavy(2, 24, 0.03), &opts).unwrap();
        for (name, v) in rep.entries() {
            assert!(v < 1e-8, "{name}: {v}");
        }
    }

    #[test]
    fn fubini_study_profile() {
        let grid = Arc::new(RadialGrid::new(1, 256).unwrap());
        let fs = HermitianMetricField::Radial(RadialMetric::fubini_study(grid));
        let rep = identity_residuals(&fs, &IdentityOptions::default()).unwrap();
        assert!(rep.worst().1 < 1e-8, "{:?}", rep.worst());
    }
}
