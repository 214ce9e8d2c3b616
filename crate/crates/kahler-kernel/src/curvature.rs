//! Curvature tensor, Ricci form, scalar curvature and norms.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{KernelError, Result};
use crate::metric::{det_hermitian, HermitianMetricField, PeriodicMetric};
use crate::periodic::{to_complex, PeriodicDiff, PeriodicScheme};
use crate::radial::{RadialBackend, RadialGeometry, RadialMetric};
use crate::tensor::{norm2_at, IndexKind, ScalarField};

const RM_VALENCE: [IndexKind; 4] = [
    IndexKind::Holo,
    IndexKind::AntiHolo,
    IndexKind::Holo,
    IndexKind::AntiHolo,
];
const RIC_VALENCE: [IndexKind; 2] = [IndexKind::Holo, IndexKind::AntiHolo];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    /// Holomorphic coordinate frame of a periodic chart.
    Coordinate,
    /// Metric-orthonormal frame adapted to the U(n) action (radial profiles).
    Orthonormal,
}

/// Per-node curvature data. Tensors are node-major with the first index most significant.
#[derive(Debug, Clone)]
pub struct CurvaturePack {
    pub n: usize,
    pub len: usize,
    pub frame: Frame,
    pub g: Vec<C64>,
    pub ginv: Vec<C64>,
    pub rm: Vec<C64>,
    pub ricci: Vec<C64>,
    /// `-d dbar log det g`, computed independently of `rm`.
    pub ricci_logdet: Vec<C64>,
    pub scalar: Vec<f64>,
    pub rm_norm2: Vec<f64>,
    pub rc_norm2: Vec<f64>,
}

impl CurvaturePack {
    pub fn rm_at(&self, node: usize, i: usize, j: usize, k: usize, l: usize) -> C64 {
        let n = self.n;
        self.rm[node * n.pow(4) + ((i * n + j) * n + k) * n + l]
    }

    pub fn ricci_at(&self, node: usize, i: usize, j: usize) -> C64 {
        self.ricci[node * self.n * self.n + i * self.n + j]
    }

    pub fn g_at(&self, node: usize) -> &[C64] {
        let nn = self.n * self.n;
        &self.g[node * nn..(node + 1) * nn]
    }

    pub fn ginv_at(&self, node: usize) -> &[C64] {
        let nn = self.n * self.n;
        &self.ginv[node * nn..(node + 1) * nn]
    }

    pub fn rm_node(&self, node: usize) -> &[C64] {
        let p = self.n.pow(4);
        &self.rm[node * p..(node + 1) * p]
    }

    /// Largest violation of `i<->k`, `jbar<->lbar` and conjugate pair symmetry.
    pub fn symmetry_residual(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for node in 0..self.len {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            let r = self.rm_at(node, i, j, k, l);
                            worst = worst
                                .max((r - self.rm_at(node, k, j, i, l)).norm())
                                .max((r - self.rm_at(node, i, l, k, j)).norm())
                                .max((r - self.rm_at(node, j, i, l, k).conj()).norm());
                        }
                    }
                }
            }
        }
        worst
    }

    /// `max |trace of Rm - (-d dbar log det g)|`.
    pub fn ricci_consistency(&self) -> f64 {
        self.ricci
            .iter()
            .zip(&self.ricci_logdet)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |scalar - g^{i jbar} R_{i jbar}|` recomputed from the stored Ricci tensor.
    pub fn trace_residual(&self) -> f64 {
        let n = self.n;
        (0..self.len)
            .map(|node| {
                let gi = self.ginv_at(node);
                let tr: C64 = (0..n)
                    .flat_map(|i| (0..n).map(move |j| (i, j)))
                    .map(|(i, j)| gi[i * n + j] * self.ricci_at(node, i, j))
                    .sum();
                (tr - self.scalar[node]).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `max |R_{i jbar} - lambda g_{i jbar}|`.
    pub fn einstein_residual(&self, lambda: f64) -> f64 {
        self.ricci
            .iter()
            .zip(&self.g)
            .map(|(r, g)| (r - g * lambda).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_rm_diff(&self, other: &CurvaturePack) -> (f64, usize) {
        let p = self.n.pow(4);
        let mut worst = (0.0, 0);
        for (k, (a, b)) in self.rm.iter().zip(&other.rm).enumerate() {
            let d = (a - b).norm();
            if d > worst.0 || d.is_nan() {
                worst = (d, k / p);
            }
        }
        worst
    }

    fn finish(&mut self) {
        let n = self.n;
        let nn = n * n;
        let p4 = nn * nn;
        let ricci: Vec<C64> = (0..self.len)
            .into_par_iter()
            .flat_map_iter(|node| {
                let gi = &self.ginv[node * nn..(node + 1) * nn];
                let rm = &self.rm[node * p4..(node + 1) * p4];
                (0..nn).map(move |ij| {
                    (0..n)
                        .flat_map(|k| (0..n).map(move |l| (k, l)))
                        .map(|(k, l)| gi[k * n + l] * rm[ij * nn + k * n + l])
                        .sum::<C64>()
                })
            })
            .collect();
        self.ricci = ricci;
        self.scalar = (0..self.len)
            .map(|node| {
                let gi = &self.ginv[node * nn..(node + 1) * nn];
                (0..nn)
                    .map(|ij| gi[ij] * self.ricci[node * nn + ij])
                    .sum::<C64>()
                    .re
            })
            .collect();
        self.rm_norm2 = (0..self.len)
            .into_par_iter()
            .map(|node| {
                norm2_at(
                    n,
                    &RM_VALENCE,
                    &self.rm[node * p4..(node + 1) * p4],
                    &self.ginv[node * nn..(node + 1) * nn],
                )
            })
            .collect();
        self.rc_norm2 = (0..self.len)
            .map(|node| {
                norm2_at(
                    n,
                    &RIC_VALENCE,
                    &self.ricci[node * nn..(node + 1) * nn],
                    &self.ginv[node * nn..(node + 1) * nn],
                )
            })
            .collect();
    }
}

/// Metric derivatives and Christoffel symbols on a periodic chart.
#[derive(Debug)]
pub struct PeriodicConnection {
    pub n: usize,
    pub len: usize,
    pub ginv: Vec<C64>,
    /// `dg[node][k][i][j] = d_k g_{i jbar}`.
    pub dg: Vec<C64>,
    /// `gamma[node][m][p][i] = Gamma^m_{p i} = g^{m lbar} d_p g_{i lbar}`.
    pub gamma: Vec<C64>,
    pub diff: PeriodicDiff,
}

impl PeriodicConnection {
    pub fn new(metric: &PeriodicMetric, scheme: PeriodicScheme) -> Self {
        let diff = PeriodicDiff::new(&metric.grid, scheme);
        let n = metric.complex_dim();
        let len = metric.grid.len();
        let n3 = n * n * n;
        let ginv: Vec<C64> = (0..len)
            .flat_map(|node| metric.inverse_at(node))
            .collect();
        let mut dg = vec![C64::new(0.0, 0.0); len * n3];
        for i in 0..n {
            for j in 0..n {
                let gij = metric.component(i, j);
                for k in 0..n {
                    let d = diff.dz(&gij, k);
                    for (node, v) in d.into_iter().enumerate() {
                        dg[node * n3 + (k * n + i) * n + j] = v;
                    }
                }
            }
        }
        let mut gamma = vec![C64::new(0.0, 0.0); len * n3];
        for node in 0..len {
            let gi = &ginv[node * n * n..(node + 1) * n * n];
            let d = &dg[node * n3..(node + 1) * n3];
            for m in 0..n {
                for p in 0..n {
                    for i in 0..n {
                        gamma[node * n3 + (m * n + p) * n + i] =
                            (0..n).map(|l| gi[m * n + l] * d[(p * n + i) * n + l]).sum();
                    }
                }
            }
        }
        PeriodicConnection {
            n,
            len,
            ginv,
            dg,
            gamma,
            diff,
        }
    }

    pub fn gamma_at(&self, node: usize, m: usize, p: usize, i: usize) -> C64 {
        let n = self.n;
        self.gamma[node * n * n * n + (m * n + p) * n + i]
    }

    pub fn ginv_at(&self, node: usize) -> &[C64] {
        &self.ginv[node * self.n * self.n..(node + 1) * self.n * self.n]
    }

    pub fn dg_component(&self, k: usize, i: usize, j: usize) -> Vec<C64> {
        let n = self.n;
        let n3 = n * n * n;
        (0..self.len).map(|node| self.dg[node * n3 + (k * n + i) * n + j]).collect()
    }
}

/// Curvature of a periodic metric with one differentiation scheme.
pub fn periodic_curvature(metric: &PeriodicMetric, scheme: PeriodicScheme) -> (CurvaturePack, PeriodicConnection) {
    let conn = PeriodicConnection::new(metric, scheme);
    let n = conn.n;
    let len = conn.len;
    let n3 = n * n * n;
    let p4 = n3 * n;
    // ddg[node][k][l][i][j] = d_lbar d_k g_{i jbar}
    let mut ddg = vec![C64::new(0.0, 0.0); len * p4];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let d = conn.dg_component(k, i, j);
                for l in 0..n {
                    let dd = conn.diff.dzb(&d, l);
                    for (node, v) in dd.into_iter().enumerate() {
                        ddg[node * p4 + ((k * n + l) * n + i) * n + j] = v;
                    }
                }
            }
        }
    }
    let rm: Vec<C64> = (0..len)
        .into_par_iter()
        .flat_map_iter(|node| {
            let gi = conn.ginv_at(node).to_vec();
            let d = conn.dg[node * n3..(node + 1) * n3].to_vec();
            let dd = ddg[node * p4..(node + 1) * p4].to_vec();
            (0..p4).map(move |flat| {
                let (i, j, k, l) = (flat / n3, (flat / (n * n)) % n, (flat / n) % n, flat % n);
                let mut r = -dd[((k * n + l) * n + i) * n + j];
                for p in 0..n {
                    for q in 0..n {
                        r += gi[p * n + q] * d[(k * n + i) * n + q] * d[(l * n + j) * n + p].conj();
                    }
                }
                r
            })
        })
        .collect();
    let logdet: Vec<C64> = to_complex(
        &(0..len)
            .map(|node| det_hermitian(n, metric.at(node)).ln())
            .collect::<Vec<_>>(),
    );
    let mut ricci_logdet = vec![C64::new(0.0, 0.0); len * n * n];
    for j in 0..n {
        let dzb = conn.diff.dzb(&logdet, j);
        for i in 0..n {
            let h = conn.diff.dz(&dzb, i);
            for (node, v) in h.into_iter().enumerate() {
                ricci_logdet[node * n * n + i * n + j] = -v;
            }
        }
    }
    let mut pack = CurvaturePack {
        n,
        len,
        frame: Frame::Coordinate,
        g: metric.comps.clone(),
        ginv: conn.ginv.clone(),
        rm,
        ricci: Vec::new(),
        ricci_logdet,
        scalar: Vec::new(),
        rm_norm2: Vec::new(),
        rc_norm2: Vec::new(),
    };
    pack.finish();
    (pack, conn)
}

/// Curvature of a radial metric in the U(n)-adapted orthonormal frame.
pub fn radial_curvature(geo: &RadialGeometry) -> CurvaturePack {
    let n = geo.complex_dim();
    let len = geo.beta.len();
    let fc = geo.frame_curvature();
    let (lr, lt) = geo.ricci_logdet();
    let p4 = n.pow(4);
    let mut rm = vec![C64::new(0.0, 0.0); len * p4];
    let mut g = vec![C64::new(0.0, 0.0); len * n * n];
    let mut ricci_logdet = vec![C64::new(0.0, 0.0); len * n * n];
    let idx = |i: usize, j: usize, k: usize, l: usize| ((i * n + j) * n + k) * n + l;
    for node in 0..len {
        let r = &mut rm[node * p4..(node + 1) * p4];
        r[idx(0, 0, 0, 0)] = C64::new(fc.k_rad[node], 0.0);
        if n == 2 {
            r[idx(1, 1, 1, 1)] = C64::new(fc.k_tan[node], 0.0);
            let m = C64::new(fc.mixed[node], 0.0);
            for (i, j, k, l) in [(0, 0, 1, 1), (1, 1, 0, 0), (0, 1, 1, 0), (1, 0, 0, 1)] {
                r[idx(i, j, k, l)] = m;
            }
        }
        for i in 0..n {
            g[node * n * n + i * n + i] = C64::new(1.0, 0.0);
        }
        ricci_logdet[node * n * n] = C64::new(lr[node], 0.0);
        if n == 2 {
            ricci_logdet[node * 4 + 3] = C64::new(lt[node], 0.0);
        }
    }
    let mut pack = CurvaturePack {
        n,
        len,
        frame: Frame::Orthonormal,
        ginv: g.clone(),
        g,
        rm,
        ricci: Vec::new(),
        ricci_logdet,
        scalar: Vec::new(),
        rm_norm2: Vec::new(),
        rc_norm2: Vec::new(),
    };
    pack.finish();
    pack
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureOptions {
    pub periodic: PeriodicScheme,
    pub periodic_check: Option<PeriodicScheme>,
    pub radial: RadialBackend,
    pub radial_check: bool,
    /// Cross-backend tolerance on `Rm`, relative to `max(1, max |Rm|)`.
    pub tolerance: f64,
}

impl Default for CurvatureOptions {
    fn default() -> Self {
        CurvatureOptions {
            periodic: PeriodicScheme::Spectral,
            periodic_check: Some(PeriodicScheme::FiniteDifference(10)),
            radial: RadialBackend::Collocation,
            radial_check: true,
            tolerance: 1e-7,
        }
    }
}

impl CurvatureOptions {
    pub fn unchecked() -> Self {
        CurvatureOptions {
            periodic_check: None,
            radial_check: false,
            ..Default::default()
        }
    }
}

fn compare(a: &CurvaturePack, b: &CurvaturePack, tol: f64) -> Result<()> {
    let scale = a.rm.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let (diff, node) = a.max_abs_rm_diff(b);
    if diff > tol * scale || diff.is_nan() {
        return Err(KernelError::BackendDisagreement {
            quantity: "Rm",
            diff,
            tol: tol * scale,
            node,
        });
    }
    Ok(())
}

pub fn curvature(metric: &HermitianMetricField, opts: &CurvatureOptions) -> Result<CurvaturePack> {
    match metric {
        HermitianMetricField::Periodic(m) => {
            let (pack, _) = periodic_curvature(m, opts.periodic);
            if let Some(check) = opts.periodic_check {
                let (other, _) = periodic_curvature(m, check);
                compare(&pack, &other, opts.tolerance)?;
            }
            Ok(pack)
        }
        HermitianMetricField::Radial(m) => radial_pack(m, opts),
    }
}

fn radial_pack(m: &RadialMetric, opts: &CurvatureOptions) -> Result<CurvaturePack> {
    let pack = radial_curvature(&m.geometry(opts.radial)?);
    if opts.radial_check {
        let other = radial_curvature(&m.geometry(opts.radial.other())?);
        compare(&pack, &other, opts.tolerance)?;
    }
    Ok(pack)
}

/// Pointwise norms `|grad f|^2`, `|Rc|^2`, `|Rm|^2`.
#[derive(Debug, Clone)]
pub struct Norms {
    pub grad_f: Option<Vec<f64>>,
    pub rc: Vec<f64>,
    pub rm: Vec<f64>,
}

pub fn norms(pack: &CurvaturePack, f: Option<&ScalarField>, metric: &HermitianMetricField) -> Result<Norms> {
    let grad_f = match f {
        None => None,
        Some(f) => {
            if !f.grid.same_as(&metric.grid()) {
                return Err(KernelError::GridMismatch("function and metric grids differ".into()));
            }
            Some(match metric {
                HermitianMetricField::Periodic(m) => {
                    let diff = PeriodicDiff::new(&m.grid, PeriodicScheme::Spectral);
                    let n = m.complex_dim();
                    let di: Vec<Vec<C64>> = (0..n).map(|i| diff.dz(&f.values, i)).collect();
                    let dj: Vec<Vec<C64>> = (0..n).map(|j| diff.dzb(&f.values, j)).collect();
                    (0..m.grid.len())
                        .map(|node| {
                            let gi = m.inverse_at(node);
                            let mut s = C64::new(0.0, 0.0);
                            for i in 0..n {
                                for j in 0..n {
                                    s += gi[i * n + j] * di[i][node] * dj[j][node];
                                }
                            }
                            s.re
                        })
                        .collect()
                }
                HermitianMetricField::Radial(m) => m
                    .geometry(RadialBackend::Collocation)?
                    .grad_norm2(&f.real_part()),
            })
        }
    };
    Ok(Norms {
        grad_f,
        rc: pack.rc_norm2.clone(),
        rm: pack.rm_norm2.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{assemble_metric, inverse_hermitian};
    use crate::periodic::PeriodicGrid;
    use crate::radial::RadialGrid;
    use rand::{Rng, SeedableRng};
    use std::sync::Arc;

    fn wavy(n: usize, m: usize, amp: f64) -> HermitianMetricField {
        let pg = Arc::new(PeriodicGrid::new(n, m).unwrap());
        let flat = HermitianMetricField::Periodic(PeriodicMetric::flat(pg.clone()));
        let phi: Vec<f64> = (0..pg.len())
            .map(|i| {
                let x = pg.coords(i);
                let y = if n == 2 { x[2] - x[3] } else { 0.0 };
                amp * ((x[0] + x[1]).cos() + 0.5 * (2.0 * x[1] - y).sin())
            })
            .collect();
        assemble_metric(&flat, &ScalarField::from_real(&flat.grid(), &phi).unwrap()).unwrap()
    }

    #[test]
    fn flat_metric_has_zero_curvature() {
        let pg = Arc::new(PeriodicGrid::new(2, 8).unwrap());
        let flat = HermitianMetricField::Periodic(PeriodicMetric::flat(pg));
        let pack = curvature(&flat, &CurvatureOptions::default()).unwrap();
        assert!(pack.rm.iter().all(|v| v.norm() == 0.0));
        assert!(pack.scalar.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn periodic_pack_invariants() {
        let g = wavy(2, 16, 0.05);
        let pack = curvature(&g, &CurvatureOptions::unchecked()).unwrap();
        assert!(pack.symmetry_residual() < 1e-10, "{}", pack.symmetry_residual());
        // log det g is not band-limited, so at N=16 the two Ricci routes differ by truncation error
        assert!(pack.ricci_consistency() < 1e-5, "{}", pack.ricci_consistency());
        assert!(pack.trace_residual() < 1e-12);
    }

    #[test]
    fn backends_agree_on_resolved_chart() {
        let g = wavy(1, 64, 0.05);
        curvature(&g, &CurvatureOptions::default()).unwrap();
    }

    #[test]
    fn under_resolved_chart_is_flagged() {
        let g = wavy(1, 8, 0.05);
        let err = curvature(&g, &CurvatureOptions::default()).unwrap_err();
        assert!(matches!(err, KernelError::BackendDisagreement { .. }));
    }

    #[test]
    fn fubini_study_is_einstein() {
        for n in 1..=2 {
            let grid = Arc::new(RadialGrid::new(n, 64).unwrap());
            let fs = HermitianMetricField::Radial(RadialMetric::fubini_study(grid));
            let pack = curvature(&fs, &CurvatureOptions::default()).unwrap();
            assert!(pack.einstein_residual(1.0) < 1e-12);
            for node in 0..pack.len {
                assert!((pack.rc_norm2[node] - n as f64).abs() < 1e-12);
                assert!((pack.scalar[node] - n as f64).abs() < 1e-12);
            }
            if n == 1 {
                // R_{1 1bar 1 1bar} = g_{1 1bar}^2 in the unit frame
                for node in 0..pack.len {
                    assert!((pack.rm_at(node, 0, 0, 0, 0).re - pack.g_at(node)[0].re.powi(2)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn norms_match_naive_contraction() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 2;
        let mut rnd = || C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let t: Vec<C64> = (0..16).map(|_| rnd()).collect();
        let a = [rnd(), rnd(), rnd(), rnd()];
        // positive Hermitian g = A A^* + I
        let mut g = [C64::new(0.0, 0.0); 4];
        for i in 0..2 {
            for j in 0..2 {
                g[i * 2 + j] = (0..2).map(|k| a[i * 2 + k] * a[j * 2 + k].conj()).sum::<C64>()
                    + if i == j { 1.0 } else { 0.0 };
            }
        }
        let gi = inverse_hermitian(n, &g);
        let r = |i: usize, j: usize, k: usize, l: usize| t[((i * 2 + j) * 2 + k) * 2 + l];
        let gup = |p: usize, q: usize| gi[p * 2 + q];
        let mut naive = C64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        for p in 0..2 {
                            for q in 0..2 {
                                for rr in 0..2 {
                                    for s in 0..2 {
                                        // g^{i qbar} g^{p jbar} g^{k sbar} g^{r lbar} R_{i jbar k lbar} conj(R_{q pbar s rbar})
                                        naive += gup(i, q) * gup(p, j) * gup(k, s) * gup(rr, l)
                                            * r(i, j, k, l)
                                            * r(q, p, s, rr).conj();
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        let got = norm2_at(n, &RM_VALENCE, &t, &gi);
        assert!((got - naive.re).abs() < 1e-10 * naive.re.abs().max(1.0));
    }
}
