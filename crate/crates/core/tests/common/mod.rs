//! Brute-force oracles shared by the integration tests. They are written
//! directly from the definitions and avoid the library's fast paths.

#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::PI;

use circle_rds::circle::noise::unit;
use circle_rds::circle::{circle_dist, wrap};
use circle_rds::rds::Orbit;

/// Uniform `[lo, hi)` draw from the counter-based generator.
pub fn uniform(seed: u64, i: u64, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * unit(seed, i)
}

/// 1-based `n` such that every hanging sum `a_k + … + a_n` is nonnegative,
/// each sum accumulated directly.
pub fn pliss_brute(a: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    for n in 1..=a.len() {
        let ok = (1..=n).all(|k| a[k - 1..n].iter().sum::<f64>() >= 0.0);
        if ok {
            out.push(n);
        }
    }
    out
}

/// `log|df|` of `L sin(2πx)` at `y`, straight from the formula.
pub fn sine_log_deriv(l: f64, y: f64) -> f64 {
    (2.0 * PI * l * (2.0 * PI * y).cos()).abs().ln()
}

/// Distance to the critical points `1/4` and `3/4` of the sine family,
/// truncated at `δ` and floored at `10⁻¹⁵`.
pub fn sine_dist_delta(y: f64, delta: f64) -> f64 {
    let d = circle_dist(y, 0.25).min(circle_dist(y, 0.75));
    if d > delta {
        1.0
    } else {
        d.max(1e-15)
    }
}

/// Literal hyperbolic-time test over all backward windows for the sine family,
/// with the derivative and the distance recomputed at each orbit point.
pub fn hyperbolic_brute(l: f64, orbit: &Orbit, kappa1: f64, delta: f64, b: f64) -> Vec<usize> {
    let n_max = orbit.len();
    let y: Vec<f64> = (0..n_max).map(|i| wrap(orbit.points[i] + orbit.noise[i])).collect();
    let ld: Vec<f64> = y.iter().map(|&v| sine_log_deriv(l, v)).collect();
    let dist: Vec<f64> = y.iter().map(|&v| sine_dist_delta(v, delta)).collect();
    let lk = kappa1.ln();
    let mut out = Vec::new();
    for n in 1..=n_max {
        let mut ok = true;
        for m in 1..=n {
            let s: f64 = ld[n - m..n].iter().sum();
            if !(s >= m as f64 * lk) || dist[n - m] < kappa1.powf(-b * m as f64) {
                ok = false;
                break;
            }
        }
        if ok {
            out.push(n);
        }
    }
    out
}

/// `∫_C log|df|` for `L sin(2πx)` by a midpoint rule on `{|df| < 1}`, with the
/// neighbourhoods `|x − c| < r` of the critical points replaced by the exact
/// local integral of `log(4π²L|x − c|)`.
pub fn sine_v_midpoint(l: f64, points: usize, r: f64) -> f64 {
    let k = 4.0 * PI * PI * l;
    let local = 2.0 * r * ((k * r).ln() - 1.0);
    let h = 1.0 / points as f64;
    let mut sum = 0.0;
    let mut comp = 0.0;
    for i in 0..points {
        let x = (i as f64 + 0.5) * h;
        let d = circle_dist(x, 0.25).min(circle_dist(x, 0.75));
        if d < r {
            continue;
        }
        let v = (2.0 * PI * l * (2.0 * PI * x).cos()).abs().ln();
        if v < 0.0 {
            let t = sum + v * h;
            comp += if sum.abs() >= (v * h).abs() { (sum - t) + v * h } else { (v * h - t) + sum };
            sum = t;
        }
    }
    // The local term uses log|df| ≈ log(k|x − c|), accurate to O(r²) inside.
    -(sum + comp + 2.0 * local)
}
