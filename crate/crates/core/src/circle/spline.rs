//! Periodic cubic spline used by tabulated maps.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Spline for the periodic part `g(x) = F(x) - degree·x` on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicSpline {
    /// Per-segment coefficients of `c0 + c1 t + c2 t² + c3 t³`, `t ∈ [0, 1)`.
    coeffs: Vec<[f64; 4]>,
    degree: f64,
}

impl PeriodicSpline {
    /// `values[i] = F(i / n)`.
    pub fn new(values: &[f64], degree: i64) -> Result<Self> {
        let n = values.len();
        if n < 8 {
            return invalid("a tabulated map needs at least 8 samples");
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("tabulated values must be finite");
        }
        let h = 1.0 / n as f64;
        let deg = degree as f64;
        let g: Vec<f64> = values.iter().enumerate().map(|(i, v)| v - deg * i as f64 * h).collect();
        let rhs: Vec<f64> =
            (0..n).map(|i| 6.0 / (h * h) * (g[(i + n - 1) % n] - 2.0 * g[i] + g[(i + 1) % n])).collect();
        // Second derivatives from the circulant system M[i-1] + 4 M[i] + M[i+1] = rhs.
        let mut m = vec![0.0; n];
        for _ in 0..400 {
            let mut delta: f64 = 0.0;
            for i in 0..n {
                let new = (rhs[i] - m[(i + n - 1) % n] - m[(i + 1) % n]) / 4.0;
                delta = delta.max((new - m[i]).abs());
                m[i] = new;
            }
            let scale = m.iter().fold(1.0f64, |a, b| a.max(b.abs()));
            if delta <= 1e-16 * scale {
                break;
            }
        }
        let coeffs = (0..n)
            .map(|j| {
                let (g0, g1) = (g[j], g[(j + 1) % n]);
                let (m0, m1) = (m[j], m[(j + 1) % n]);
                let h2 = h * h;
                [g0, (g1 - g0) - h2 / 6.0 * (2.0 * m0 + m1), h2 * m0 / 2.0, h2 / 6.0 * (m1 - m0)]
            })
            .collect();
        Ok(PeriodicSpline { coeffs, degree: deg })
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn degree(&self) -> f64 {
        self.degree
    }

    /// Segment index, local parameter and integer part of `x`.
    pub fn locate(&self, x: f64) -> (usize, f64, f64) {
        let k = x.floor();
        let u = (x - k) * self.coeffs.len() as f64;
        let j = (u.floor() as usize).min(self.coeffs.len() - 1);
        (j, u - j as f64, k)
    }

    pub fn segment(&self, j: usize) -> [f64; 4] {
        self.coeffs[j]
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (j, t, _) = self.locate(x);
        let c = self.coeffs[j];
        c[0] + t * (c[1] + t * (c[2] + t * c[3])) + self.degree * x
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let (j, t, _) = self.locate(x);
        let c = self.coeffs[j];
        let n = self.coeffs.len() as f64;
        (c[1] + t * (2.0 * c[2] + 3.0 * t * c[3])) * n + self.degree
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        let (j, t, _) = self.locate(x);
        let c = self.coeffs[j];
        let n = self.coeffs.len() as f64;
        (2.0 * c[2] + 6.0 * t * c[3]) * n * n
    }
}
