//! Grid checks of the non-degeneracy conditions
//! `(1/B) dist(x, 𝒮𝒞)^β ≤ |df(x)|` and
//! `|log|df(x)| - log|df(y)|| ≤ B dist(x, y) / dist(x, 𝒮𝒞)^β` for
//! `dist(x, y) ≤ dist(x, 𝒮𝒞) / 2`.

use serde::{Deserialize, Serialize};

use super::map::{CircleMap, Regularity};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub b: f64,
    pub beta: f64,
    pub grid: usize,
    pub passed: bool,
    /// Smallest slack over both inequalities; negative on failure.
    pub worst_margin: f64,
    pub witness_x: f64,
    pub witness_y: Option<f64>,
    pub witness_dist: f64,
}

const PAIR_FRACTIONS: [f64; 4] = [1.0, 0.5, 0.1, 0.01];

fn sample_dist(map: &CircleMap, x: f64) -> f64 {
    // an empty singular set imposes no constraint beyond the circle's diameter
    map.dist_to_singular(x).min(0.5)
}

/// Checks the regularity constants attached to `map` on a uniform grid.
pub fn regularity_check(map: &CircleMap, grid: usize) -> Result<RegularityReport> {
    let Regularity { b, beta } = map.regularity();
    if !(beta > 0.0) {
        return invalid(format!("beta = {beta} must be positive"));
    }
    if grid < 1000 {
        return invalid(format!("grid = {grid} must be at least 1000"));
    }
    let mut rep = RegularityReport {
        b,
        beta,
        grid,
        passed: true,
        worst_margin: f64::INFINITY,
        witness_x: 0.0,
        witness_y: None,
        witness_dist: 0.0,
    };
    for i in 0..grid {
        let x = (i as f64 + 0.5) / grid as f64;
        let d = sample_dist(map, x);
        if d < 1e-9 {
            continue;
        }
        let dfx = map.deriv(x).abs();
        let m1 = dfx - d.powf(beta) / b;
        if m1 < rep.worst_margin {
            rep.worst_margin = m1;
            rep.witness_x = x;
            rep.witness_y = None;
            rep.witness_dist = d;
        }
        let lx = dfx.ln();
        for f in PAIR_FRACTIONS {
            for s in [-1.0, 1.0] {
                let h = s * f * d / 2.0;
                let y = x + h;
                let ly = map.deriv(y).abs().ln();
                let m2 = b * h.abs() / d.powf(beta) - (lx - ly).abs();
                if m2 < rep.worst_margin {
                    rep.worst_margin = m2;
                    rep.witness_x = x;
                    rep.witness_y = Some(super::geometry::wrap(y));
                    rep.witness_dist = d;
                }
            }
        }
    }
    rep.passed = rep.worst_margin >= 0.0;
    Ok(rep)
}

/// Smallest `B` on a grid making both inequalities hold for the given `β`,
/// inflated by ten percent.
pub fn estimate_regularity(map: &CircleMap, beta: f64, grid: usize) -> Regularity {
    let mut need: f64 = 1.0;
    for i in 0..grid {
        let x = (i as f64 + 0.5) / grid as f64;
        let d = sample_dist(map, x);
        if d < 1e-9 {
            continue;
        }
        let dfx = map.deriv(x).abs();
        if dfx > 0.0 {
            need = need.max(d.powf(beta) / dfx);
        }
        let lx = dfx.ln();
        for f in PAIR_FRACTIONS {
            for s in [-1.0, 1.0] {
                let h = s * f * d / 2.0;
                let ly = map.deriv(x + h).abs().ln();
                need = need.max((lx - ly).abs() * d.powf(beta) / h.abs());
            }
        }
    }
    Regularity { b: 1.1 * need, beta }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sine_passes_with_default_constants() {
        let m = CircleMap::sine(3.0).unwrap();
        assert_eq!(m.regularity().b, 4.0 * PI * PI * 3.0);
        let r = regularity_check(&m, 1000).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.worst_margin >= 0.0);
    }

    #[test]
    fn sine_fails_with_tiny_b_near_critical_points() {
        let m = CircleMap::sine(3.0).unwrap().with_regularity(Regularity { b: 1.0001, beta: 1.0 }).unwrap();
        let r = regularity_check(&m, 1000).unwrap();
        assert!(!r.passed);
        assert!(r.worst_margin < 0.0);
        assert!(m.dist_to_critical(r.witness_x) < 0.2);
    }

    #[test]
    fn rejects_small_grid() {
        let m = CircleMap::sine(3.0).unwrap();
        assert!(regularity_check(&m, 10).is_err());
    }

    #[test]
    fn estimated_constant_passes() {
        let m = CircleMap::sine(3.0).unwrap();
        let r = estimate_regularity(&m, 1.0, 2000);
        assert!(r.b <= 4.0 * PI * PI * 3.0);
        let m = m.with_regularity(r).unwrap();
        assert!(regularity_check(&m, 2000).unwrap().passed);
    }
}
