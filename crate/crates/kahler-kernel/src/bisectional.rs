//! Minimum holomorphic bisectional curvature over unit vectors.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::curvature::CurvaturePack;

#[derive(Debug, Clone, PartialEq)]
pub struct BisectionalMin {
    pub value: f64,
    pub node: usize,
    pub v: Vec<C64>,
    pub w: Vec<C64>,
}

fn bisectional(pack: &CurvaturePack, node: usize, v: &[C64], w: &[C64]) -> f64 {
    let n = pack.n;
    let rm = pack.rm_node(node);
    let mut s = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let vv = v[i] * v[j].conj();
            for k in 0..n {
                for l in 0..n {
                    s += rm[((i * n + j) * n + k) * n + l] * vv * w[k] * w[l].conj();
                }
            }
        }
    }
    s.re
}

fn normalize(g: &[C64], n: usize, v: &mut [C64]) {
    let mut s = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            s += g[i * n + j] * v[i] * v[j].conj();
        }
    }
    let r = s.re.sqrt();
    for x in v.iter_mut() {
        *x /= r;
    }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n)
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

fn node_min(pack: &CurvaturePack, node: usize, budget: usize, seed: u64) -> BisectionalMin {
    let n = pack.n;
    let g = pack.g_at(node);
    if n == 1 {
        let v = vec![C64::new(1.0 / g[0].re.sqrt(), 0.0)];
        return BisectionalMin {
            value: bisectional(pack, node, &v, &v),
            node,
            v: v.clone(),
            w: v,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (node as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut best = (f64::INFINITY, Vec::new(), Vec::new());
    for _ in 0..budget.max(1) {
        let mut v = random_vec(&mut rng, n);
        let mut w = random_vec(&mut rng, n);
        normalize(g, n, &mut v);
        normalize(g, n, &mut w);
        let b = bisectional(pack, node, &v, &w);
        if b < best.0 {
            best = (b, v, w);
        }
    }
    // pattern search around the best sample
    let (mut val, mut v, mut w) = best;
    let mut step = 0.25;
    while step > 1e-7 {
        let mut improved = false;
        for _ in 0..8 {
            let mut v2: Vec<C64> = v.iter().zip(random_vec(&mut rng, n)).map(|(a, d)| a + d * step).collect();
            let mut w2: Vec<C64> = w.iter().zip(random_vec(&mut rng, n)).map(|(a, d)| a + d * step).collect();
            normalize(g, n, &mut v2);
            normalize(g, n, &mut w2);
            let b = bisectional(pack, node, &v2, &w2);
            if b < val {
                val = b;
                v = v2;
                w = w2;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    BisectionalMin { value: val, node, v, w }
}

/// Smallest `R_{i jbar k lbar} v^i v^jbar w^k w^lbar` over g-unit `v, w` and all nodes.
///
/// In dimension one the value at each node is exact; in dimension two `sample_budget`
/// seeded random pairs per node are refined by a shrinking pattern search.
pub fn min_bisectional(pack: &CurvaturePack, sample_budget: usize, seed: u64) -> BisectionalMin {
    let per_node: Vec<BisectionalMin> = (0..pack.len)
        .into_par_iter()
        .map(|node| node_min(pack, node, sample_budget, seed))
        .collect();
    per_node
        .into_iter()
        .reduce(|a, b| if b.value < a.value { b } else { a })
        .expect("grid is nonempty")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::{curvature, CurvatureOptions};
    use crate::metric::{HermitianMetricField, PeriodicMetric};
    use crate::periodic::PeriodicGrid;
    use crate::radial::{RadialGrid, RadialMetric};
    use std::sync::Arc;

    #[test]
    fn flat_is_zero() {
        let pg = Arc::new(PeriodicGrid::new(2, 4).unwrap());
        let pack = curvature(&HermitianMetricField::Periodic(PeriodicMetric::flat(pg)), &CurvatureOptions::unchecked()).unwrap();
        assert_eq!(min_bisectional(&pack, 4, 1).value, 0.0);
    }

    #[test]
    fn fubini_study_values() {
        let g1 = Arc::new(RadialGrid::new(1, 16).unwrap());
        let p1 = curvature(&HermitianMetricField::Radial(RadialMetric::fubini_study(g1)), &CurvatureOptions::unchecked()).unwrap();
        assert!((min_bisectional(&p1, 1, 0).value - 1.0).abs() < 1e-12);
        let g2 = Arc::new(RadialGrid::new(2, 4).unwrap());
        let p2 = curvature(&HermitianMetricField::Radial(RadialMetric::fubini_study(g2)), &CurvatureOptions::unchecked()).unwrap();
        let m = min_bisectional(&p2, 64, 3);
        assert!((m.value - 1.0 / 3.0).abs() < 1e-6, "{}", m.value);
    }

    #[test]
    fn seeded_search_is_reproducible() {
        let g2 = Arc::new(RadialGrid::new(2, 6).unwrap());
        let p2 = curvature(&HermitianMetricField::Radial(RadialMetric::fubini_study(g2)), &CurvatureOptions::unchecked()).unwrap();
        assert_eq!(min_bisectional(&p2, 16, 9), min_bisectional(&p2, 16, 9));
    }
}
