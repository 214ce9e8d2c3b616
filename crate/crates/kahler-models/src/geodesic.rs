//! Distances and ball volumes of U(n)-invariant metrics, measured from a fixed pole.
//!
//! All lengths and volumes are Riemannian (`ds^2 = 2g`). Along the meridian through
//! the poles write `xi = -cos(theta)`; the speed `sqrt((n+1)/2) e^{rho/2}` is an even
//! smooth function of `theta`, so its cosine series on the Chebyshev nodes integrates
//! to the distance spectrally.

use std::f64::consts::PI;
use std::sync::Arc;

use kahler_kernel::{HermitianMetricField, RadialBackend, RadialGrid};

use crate::error::{ModelError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pole {
    /// `z = 0`.
    Origin,
    /// `z = infinity`; a fixed point of the symmetry group only on CP^1.
    Infinity,
}

#[derive(Debug, Clone)]
pub struct SymmetricGeodesicTable {
    pub center: Pole,
    pub n: usize,
    /// Distance from the center to each radial node, ascending.
    pub radii: Vec<f64>,
    /// Riemannian volume of the ball of radius `radii[k]`.
    pub volumes: Vec<f64>,
    /// Length of the meridian between the poles, i.e. the greatest distance from the center.
    pub diameter: f64,
    pub total_volume: f64,
    grid: Arc<RadialGrid>,
    beta: Vec<f64>,
    /// Cosine coefficients of the meridian speed in `theta`.
    speed: Vec<f64>,
}

fn cosine_coefficients(h: &[f64]) -> Vec<f64> {
    let m = h.len() - 1;
    (0..=m)
        .map(|k| {
            let s: f64 = (0..=m)
                .map(|j| {
                    let w = if j == 0 || j == m { 0.5 } else { 1.0 };
                    w * h[j] * (PI * (k * j) as f64 / m as f64).cos()
                })
                .sum();
            let c = 2.0 * s / m as f64;
            if k == 0 || k == m {
                0.5 * c
            } else {
                c
            }
        })
        .collect()
}

impl SymmetricGeodesicTable {
    /// Meridian length from `z = 0` to the point at polar angle `theta`.
    fn arc_from_origin(&self, theta: f64) -> f64 {
        self.speed[0] * theta
            + self
                .speed
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, a)| a * (k as f64 * theta).sin() / k as f64)
                .sum::<f64>()
    }

    fn speed_at(&self, theta: f64) -> f64 {
        self.speed
            .iter()
            .enumerate()
            .map(|(k, a)| a * (k as f64 * theta).cos())
            .sum()
    }

    /// Polar angle (from `z = 0`) of the point at meridian distance `s` from `z = 0`.
    fn theta_at_arc(&self, s: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, PI);
        let mut th = PI * s / self.diameter;
        for _ in 0..100 {
            let f = self.arc_from_origin(th) - s;
            if f.abs() < 1e-15 * self.diameter.max(1.0) {
                break;
            }
            if f > 0.0 {
                hi = th;
            } else {
                lo = th;
            }
            let next = th - f / self.speed_at(th);
            th = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        }
        th
    }

    fn origin_ball(&self, theta: f64) -> f64 {
        let xi = -theta.cos();
        let n = self.n as i32;
        let u = 0.5 * (self.n + 1) as f64 * (1.0 + xi) * self.grid.interpolate(&self.beta, xi).exp();
        let fact = if self.n == 2 { 2.0 } else { 1.0 };
        (2.0 * PI * u).powi(n) / fact
    }

    /// Riemannian volume of the ball of radius `r` about the center.
    pub fn volume(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        if r >= self.diameter {
            return self.total_volume;
        }
        match self.center {
            Pole::Origin => self.origin_ball(self.theta_at_arc(r)),
            Pole::Infinity => self.total_volume - self.origin_ball(self.theta_at_arc(self.diameter - r)),
        }
    }

    /// Volume of `{r1 <= d(center, x) < r2}`.
    pub fn annulus(&self, r1: f64, r2: f64) -> f64 {
        self.volume(r2) - self.volume(r1)
    }

    pub fn is_monotone(&self) -> bool {
        self.volumes.windows(2).all(|w| w[1] > w[0]) && self.radii.windows(2).all(|w| w[1] > w[0])
    }
}

/// Distance and ball-volume table about a symmetry pole of a radial metric.
pub fn geodesic_table(metric: &HermitianMetricField, center: Pole) -> Result<SymmetricGeodesicTable> {
    let m = metric.as_radial().ok_or_else(|| {
        ModelError::AsymmetryDetected("periodic charts carry no rotational symmetry".into())
    })?;
    let n = m.grid.complex_dim();
    if n == 2 && center == Pole::Infinity {
        return Err(ModelError::AsymmetryDetected(
            "on CP^2 the locus z = infinity is a line, not a fixed point".into(),
        ));
    }
    let geo = m.geometry(RadialBackend::Collocation)?;
    let scale = (0.5 * (n + 1) as f64).sqrt();
    let h: Vec<f64> = geo.rho.iter().map(|r| scale * (0.5 * r).exp()).collect();
    let mut table = SymmetricGeodesicTable {
        center,
        n,
        radii: Vec::new(),
        volumes: Vec::new(),
        diameter: 0.0,
        total_volume: 2f64.powi(n as i32) * geo.volume(),
        grid: m.grid.clone(),
        beta: m.beta.clone(),
        speed: cosine_coefficients(&h),
    };
    table.diameter = table.arc_from_origin(PI);
    let deg = m.grid.degree();
    let from_origin: Vec<f64> = (0..=deg)
        .map(|j| table.arc_from_origin(PI * j as f64 / deg as f64))
        .collect();
    let balls: Vec<f64> = (0..=deg)
        .map(|j| table.origin_ball(PI * j as f64 / deg as f64))
        .collect();
    match center {
        Pole::Origin => {
            table.radii = from_origin;
            table.volumes = balls;
        }
        Pole::Infinity => {
            table.radii = from_origin.iter().rev().map(|s| table.diameter - s).collect();
            table.volumes = balls.iter().rev().map(|v| table.total_volume - v).collect();
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{bump_profile, fubini_study, radial_metric};
    use kahler_kernel::{PeriodicGrid, PeriodicMetric};

    #[test]
    fn round_sphere_caps() {
        let fs = fubini_study(1, 64).unwrap();
        for pole in [Pole::Origin, Pole::Infinity] {
            let t = geodesic_table(&fs, pole).unwrap();
            assert!((t.diameter - PI).abs() < 1e-8);
            assert!((t.total_volume - 4.0 * PI).abs() < 1e-10);
            for r in [0.1, 0.7, PI / 2.0, 2.5, 3.1] {
                assert!((t.volume(r) - 2.0 * PI * (1.0 - r.cos())).abs() < 1e-10, "{r}");
            }
            assert!((t.volume(PI / 2.0) - 2.0 * PI).abs() < 1e-10);
            for (r, v) in t.radii.iter().zip(&t.volumes) {
                assert!((v - 2.0 * PI * (1.0 - r.cos())).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn small_balls_are_euclidean() {
        let fs = fubini_study(1, 64).unwrap();
        let t = geodesic_table(&fs, Pole::Origin).unwrap();
        let r = 1e-3;
        assert!((t.volume(r) / (r * r) - PI).abs() < 1e-6);
        let fs2 = fubini_study(2, 64).unwrap();
        let t2 = geodesic_table(&fs2, Pole::Origin).unwrap();
        assert!((t2.volume(r) / r.powi(4) - 0.5 * PI * PI).abs() < 1e-5);
    }

    #[test]
    fn bumped_table_is_monotone_and_exhausts_volume() {
        for n in 1..=2 {
            let grid = Arc::new(RadialGrid::new(n, 64).unwrap());
            let m = radial_metric(&bump_profile(grid, 0.2).unwrap()).unwrap();
            let t = geodesic_table(&m, Pole::Origin).unwrap();
            assert!(t.is_monotone());
            let last = *t.volumes.last().unwrap();
            assert!((last - t.total_volume).abs() < 1e-6 * t.total_volume);
            assert!((t.volume(t.diameter) - t.total_volume).abs() < 1e-6 * t.total_volume);
        }
    }

    #[test]
    fn periodic_and_cp2_infinity_are_rejected() {
        let pg = Arc::new(PeriodicGrid::new(1, 8).unwrap());
        let flat = HermitianMetricField::Periodic(PeriodicMetric::flat(pg));
        assert!(matches!(geodesic_table(&flat, Pole::Origin), Err(ModelError::AsymmetryDetected(_))));
        let fs2 = fubini_study(2, 16).unwrap();
        assert!(matches!(geodesic_table(&fs2, Pole::Infinity), Err(ModelError::AsymmetryDetected(_))));
    }
}
