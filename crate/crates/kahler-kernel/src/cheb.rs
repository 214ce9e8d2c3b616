//! Chebyshev–Gauss–Lobatto collocation on [-1, 1].
//!
//! Nodes are stored in ascending order, `xi[j] = -cos(pi j / N)`, so index 0 is the
//! south pole of a radial profile and index N the north pole.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{num_complex::Complex64, Fft, FftPlanner};

/// Ascending Chebyshev–Gauss–Lobatto nodes for polynomial degree `n`.
pub fn nodes(n: usize) -> Vec<f64> {
    assert!(n >= 2, "need at least three collocation nodes");
    // -cos(pi j/n) written as a sine keeps the nodes exactly antisymmetric
    (0..=n)
        .map(|j| (PI * (2.0 * j as f64 - n as f64) / (2.0 * n as f64)).sin())
        .collect()
}

/// Clenshaw–Curtis quadrature weights for the CGL nodes (sum to 2).
pub fn clenshaw_curtis(n: usize) -> Vec<f64> {
    let theta: Vec<f64> = (0..=n).map(|j| PI * j as f64 / n as f64).collect();
    let mut w = vec![0.0; n + 1];
    let nf = n as f64;
    let mut v = vec![1.0; n.saturating_sub(1)];
    if n % 2 == 0 {
        w[0] = 1.0 / (nf * nf - 1.0);
        w[n] = w[0];
        for k in 1..n / 2 {
            let kf = k as f64;
            for (i, vi) in v.iter_mut().enumerate() {
                *vi -= 2.0 * (2.0 * kf * theta[i + 1]).cos() / (4.0 * kf * kf - 1.0);
            }
        }
        for (i, vi) in v.iter_mut().enumerate() {
            *vi -= (nf * theta[i + 1]).cos() / (nf * nf - 1.0);
        }
    } else {
        w[0] = 1.0 / (nf * nf);
        w[n] = w[0];
        for k in 1..=(n - 1) / 2 {
            let kf = k as f64;
            for (i, vi) in v.iter_mut().enumerate() {
                *vi -= 2.0 * (2.0 * kf * theta[i + 1]).cos() / (4.0 * kf * kf - 1.0);
            }
        }
    }
    for (i, vi) in v.iter().enumerate() {
        w[i + 1] = 2.0 * vi / nf;
    }
    w
}

/// Barycentric weights of the CGL nodes (ascending order).
pub fn barycentric_weights(n: usize) -> Vec<f64> {
    (0..=n)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n {
                0.5 * s
            } else {
                s
            }
        })
        .collect()
}

/// Dense first-derivative matrix, row-major `(n+1) x (n+1)`.
///
/// Node differences use the trigonometric identity and the diagonal uses the
/// negative-sum trick, both to keep rounding error at O(N^2 eps).
pub fn diff_matrix(n: usize) -> Vec<f64> {
    let m = n + 1;
    let bw = barycentric_weights(n);
    let ang = |j: usize| PI * j as f64 / n as f64;
    let mut d = vec![0.0; m * m];
    for i in 0..m {
        let mut diag = 0.0;
        for j in 0..m {
            if i == j {
                continue;
            }
            // xi_i - xi_j = 2 sin((a_i + a_j)/2) sin((a_i - a_j)/2)
            let dx = 2.0 * (0.5 * (ang(i) + ang(j))).sin() * (0.5 * (ang(i) - ang(j))).sin();
            let v = (bw[j] / bw[i]) / dx;
            d[i * m + j] = v;
            diag -= v;
        }
        d[i * m + i] = diag;
    }
    d
}

/// Dense matrix-vector product for a row-major square matrix.
pub fn matvec(a: &[f64], x: &[f64]) -> Vec<f64> {
    let m = x.len();
    debug_assert_eq!(a.len(), m * m);
    a.chunks_exact(m)
        .map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum())
        .collect()
}

/// Row-major product of two square matrices.
pub fn matmul(a: &[f64], b: &[f64], m: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * m];
    for i in 0..m {
        for k in 0..m {
            let aik = a[i * m + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..m {
                c[i * m + j] += aik * b[k * m + j];
            }
        }
    }
    c
}

/// Barycentric interpolation of nodal values at an arbitrary point of [-1, 1].
pub fn interpolate(xi: &[f64], bw: &[f64], values: &[f64], x: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&xj, &wj), &fj) in xi.iter().zip(bw).zip(values) {
        let dx = x - xj;
        if dx == 0.0 {
            return fj;
        }
        let t = wj / dx;
        num += t * fj;
        den += t;
    }
    num / den
}

/// Chebyshev differentiation through the coefficient recurrence, evaluated with FFTs.
///
/// Algebraically identical to the dense matrix on polynomial data but shares no code
/// with it, so the two serve as independent backends.
pub struct ChebFft {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for ChebFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChebFft").field("n", &self.n).finish()
    }
}

impl ChebFft {
    pub fn new(n: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(2 * n);
        ChebFft { n, fft }
    }

    /// Coefficients `a_k` of the interpolant `sum a_k T_k(x)` from values at
    /// `x_j = cos(pi j / n)` (descending order).
    fn coefficients(&self, desc: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut buf: Vec<Complex64> = Vec::with_capacity(2 * n);
        for &v in desc.iter() {
            buf.push(Complex64::new(v, 0.0));
        }
        for k in (1..n).rev() {
            buf.push(Complex64::new(desc[k], 0.0));
        }
        self.fft.process(&mut buf);
        (0..=n)
            .map(|k| {
                let c = buf[k].re / n as f64;
                if k == 0 || k == n {
                    0.5 * c
                } else {
                    c
                }
            })
            .collect()
    }

    fn evaluate(&self, coef: &[f64]) -> Vec<f64> {
        // values f(x_j) = sum_k a_k cos(pi j k / n): a DCT-I, done as a length-2n FFT
        let n = self.n;
        let mut buf: Vec<Complex64> = Vec::with_capacity(2 * n);
        for (k, &a) in coef.iter().enumerate() {
            let s = if k == 0 || k == n { a } else { 0.5 * a };
            buf.push(Complex64::new(s, 0.0));
        }
        for k in (1..n).rev() {
            buf.push(Complex64::new(0.5 * coef[k], 0.0));
        }
        self.fft.process(&mut buf);
        (0..=n).map(|j| buf[j].re).collect()
    }

    /// Derivative of ascending-ordered nodal values.
    pub fn derivative(&self, asc: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(asc.len(), n + 1);
        // the descending array lists the same nodes as x_j = cos(pi j / n)
        let desc: Vec<f64> = asc.iter().rev().copied().collect();
        let a = self.coefficients(&desc);
        let mut b = vec![0.0; n + 1];
        if n >= 1 {
            b[n - 1] = 2.0 * n as f64 * a[n];
        }
        for k in (1..n).rev() {
            b[k - 1] = b[k + 1] + 2.0 * k as f64 * a[k];
        }
        b[0] *= 0.5;
        let vals_desc = self.evaluate(&b);
        vals_desc.into_iter().rev().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(x: f64) -> (f64, f64) {
        // p = x^7 - 3x^4 + x, p' = 7x^6 - 12x^3 + 1
        (x.powi(7) - 3.0 * x.powi(4) + x, 7.0 * x.powi(6) - 12.0 * x.powi(3) + 1.0)
    }

    #[test]
    fn nodes_are_ascending_and_symmetric() {
        let x = nodes(9);
        assert_eq!(x[0], -1.0);
        assert_eq!(x[9], 1.0);
        for j in 0..=9 {
            assert_eq!(x[j], -x[9 - j]);
            assert!((x[j] + (PI * j as f64 / 9.0).cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn quadrature_is_exact_on_polynomials() {
        for n in [8usize, 9, 16] {
            let x = nodes(n);
            let w = clenshaw_curtis(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            assert!(w.iter().all(|&v| v > 0.0));
            for k in 0..n {
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                let want = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((got - want).abs() < 1e-13, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn both_derivatives_are_exact_on_polynomials() {
        for n in [8usize, 11, 32] {
            let x = nodes(n);
            let (f, df): (Vec<f64>, Vec<f64>) = x.iter().map(|&t| poly(t)).unzip();
            let dm = matvec(&diff_matrix(n), &f);
            let df_fft = ChebFft::new(n).derivative(&f);
            for j in 0..=n {
                assert!((dm[j] - df[j]).abs() < 1e-11, "matrix n={n} j={j}");
                assert!((df_fft[j] - df[j]).abs() < 1e-11, "fft n={n} j={j}");
            }
        }
    }

    #[test]
    fn interpolation_reproduces_polynomial() {
        let n = 12;
        let x = nodes(n);
        let f: Vec<f64> = x.iter().map(|&t| poly(t).0).collect();
        let bw = barycentric_weights(n);
        for &t in &[-0.93, -0.2, 0.0, 0.55, 0.999] {
            assert!((interpolate(&x, &bw, &f, t) - poly(t).0).abs() < 1e-12);
        }
    }
}
