//! The Euclidean heat kernel as an expanding soliton: the matrix identity
//! `D^2 u + Du V + V Du + u V V + (u/2t) I = 0` with `V = x/2t`, in closed form.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{EstimateError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatKernelReport {
    pub n_real: usize,
    pub points: usize,
    /// Largest entry of the matrix expression over all points.
    pub max_matrix_residual: f64,
    /// Largest `|u_t + 2 Du.V + u|V|^2 + (n/2t) u|`.
    pub max_trace_residual: f64,
    /// Index of the point attaining `max_matrix_residual`.
    pub witness: usize,
}

/// Matrix and trace residuals at one point.
pub fn heat_kernel_residual(x: &[f64], t: f64) -> (f64, f64) {
    let n = x.len();
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let u = (4.0 * PI * t).powf(-(n as f64) / 2.0) * (-r2 / (4.0 * t)).exp();
    let du: Vec<f64> = x.iter().map(|xi| -u * xi / (2.0 * t)).collect();
    let v: Vec<f64> = x.iter().map(|xi| xi / (2.0 * t)).collect();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let delta = if i == j { 1.0 } else { 0.0 };
            let hess = u * (x[i] * x[j] / (4.0 * t * t) - delta / (2.0 * t));
            let e = hess + du[i] * v[j] + du[j] * v[i] + u * v[i] * v[j] + u / (2.0 * t) * delta;
            worst = worst.max(e.abs());
        }
    }
    let ut = u * (r2 / (4.0 * t * t) - n as f64 / (2.0 * t));
    let dot: f64 = du.iter().zip(&v).map(|(a, b)| a * b).sum();
    let v2: f64 = v.iter().map(|a| a * a).sum();
    let trace = ut + 2.0 * dot + u * v2 + n as f64 / (2.0 * t) * u;
    (worst, trace.abs())
}

pub fn heat_kernel_identity(points: &[Vec<f64>], times: &[f64], n_real: usize) -> Result<HeatKernelReport> {
    if points.len() != times.len() {
        return Err(EstimateError::Unsupported(format!("{} points but {} times", points.len(), times.len())));
    }
    let mut rep = HeatKernelReport {
        n_real,
        points: points.len(),
        max_matrix_residual: 0.0,
        max_trace_residual: 0.0,
        witness: 0,
    };
    for (k, (x, &t)) in points.iter().zip(times).enumerate() {
        if x.len() != n_real {
            return Err(EstimateError::Unsupported(format!("point {k} has dimension {}, expected {n_real}", x.len())));
        }
        if !(t > 0.0) {
            return Err(EstimateError::Unsupported(format!("time {t} at point {k} is not positive")));
        }
        let (m, tr) = heat_kernel_residual(x, t);
        if m > rep.max_matrix_residual {
            rep.max_matrix_residual = m;
            rep.witness = k;
        }
        rep.max_trace_residual = rep.max_trace_residual.max(tr);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_is_exact() {
        let (m, tr) = heat_kernel_residual(&[0.0, 0.0], 1.0);
        assert!(m < 1e-15 && tr < 1e-15);
    }

    #[test]
    fn bad_input_is_rejected() {
        assert!(heat_kernel_identity(&[vec![1.0]], &[0.0], 1).is_err());
        assert!(heat_kernel_identity(&[vec![1.0, 2.0]], &[1.0], 1).is_err());
    }
}
