use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle::{wrap, CircleMap, NoiseStream};
use crate::error::{invalid, Error, Result};
use crate::stats::{mean, variance, KahanSum};

/// A finite random orbit together with its log-derivative and
/// critical-recurrence sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orbit {
    pub x0: f64,
    /// `x_0, …, x_n`.
    pub points: Vec<f64>,
    /// `ω_0, …, ω_{n-1}`.
    pub noise: Vec<f64>,
    /// `log|df(x_i + ω_i)|` for `i < n`.
    pub log_derivs: Vec<f64>,
    /// `S_0 = 0, …, S_n`.
    pub s: Vec<f64>,
    pub deltas: Vec<f64>,
    /// Per δ: `-log dist_δ(x_i, 𝒮𝒞 - ω_i)` for `i < n`.
    pub neg_log_dist: Vec<Vec<f64>>,
    /// Per δ: `Z_0 = 0, …, Z_n`.
    pub z: Vec<Vec<f64>>,
    /// First step with a critical hit; `S` is `-∞` from `singular_at + 1` on.
    pub singular_at: Option<usize>,
    /// Number of truncated distances raised to the floor.
    pub clamped: usize,
}

impl Orbit {
    pub fn len(&self) -> usize {
        self.noise.len()
    }

    pub fn is_empty(&self) -> bool {
        self.noise.is_empty()
    }

    pub fn is_poisoned(&self) -> bool {
        self.singular_at.is_some()
    }

    pub fn delta_index(&self, delta: f64) -> Option<usize> {
        self.deltas.iter().position(|&d| d == delta)
    }

    pub fn z_for(&self, delta: f64) -> Option<&[f64]> {
        self.delta_index(delta).map(|k| self.z[k].as_slice())
    }
}

/// Iterates `n` random steps from `x0`.
pub fn iterate_orbit(map: &CircleMap, noise: &NoiseStream, x0: f64, n: usize, deltas: &[f64]) -> Result<Orbit> {
    if !x0.is_finite() {
        return invalid("x0 must be finite");
    }
    for &d in deltas {
        if !(d > 0.0 && d < 1.0) {
            return invalid(format!("delta = {d} must lie in (0, 1)"));
        }
    }
    let mut orbit = Orbit {
        x0,
        points: Vec::with_capacity(n + 1),
        noise: Vec::with_capacity(n),
        log_derivs: Vec::with_capacity(n),
        s: Vec::with_capacity(n + 1),
        deltas: deltas.to_vec(),
        neg_log_dist: vec![Vec::with_capacity(n); deltas.len()],
        z: vec![Vec::with_capacity(n + 1); deltas.len()],
        singular_at: None,
        clamped: 0,
    };
    let mut x = wrap(x0);
    orbit.points.push(x);
    orbit.s.push(0.0);
    for z in orbit.z.iter_mut() {
        z.push(0.0);
    }
    let mut s_sum = KahanSum::new();
    let mut z_sums = vec![KahanSum::new(); deltas.len()];
    for i in 0..n {
        let w = noise.draw(i);
        let ld = match map.log_abs_derivative(x, w) {
            Ok(v) => v,
            Err(Error::NonDifferentiable { .. }) => f64::NEG_INFINITY,
            Err(e) => return Err(e),
        };
        if ld == f64::NEG_INFINITY && orbit.singular_at.is_none() {
            orbit.singular_at = Some(i);
        }
        orbit.log_derivs.push(ld);
        if orbit.singular_at.is_some() {
            orbit.s.push(f64::NEG_INFINITY);
        } else {
            s_sum.add(ld);
            orbit.s.push(s_sum.value());
        }
        for (k, &d) in deltas.iter().enumerate() {
            let td = map.truncated_distance(x, w, d);
            if td.clamped {
                orbit.clamped += 1;
            }
            let b = -td.value.ln();
            orbit.neg_log_dist[k].push(b);
            z_sums[k].add(b);
            orbit.z[k].push(z_sums[k].value());
        }
        orbit.noise.push(w);
        x = map.step(x, w);
        orbit.points.push(x);
    }
    Ok(orbit)
}

/// `S_n / n`.
pub fn finite_time_lyapunov(orbit: &Orbit, n: usize) -> Result<f64> {
    if n == 0 || n > orbit.len() {
        return invalid(format!("n = {n} must lie in 1..={}", orbit.len()));
    }
    if let Some(i) = orbit.singular_at {
        if i < n {
            return Err(Error::SingularHit { index: i });
        }
    }
    Ok(orbit.s[n] / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub n: usize,
    pub per_seed: Vec<(u64, Option<f64>)>,
    pub mean: f64,
    pub std_err: f64,
    pub poisoned: usize,
}

/// Monte Carlo estimate of the Lyapunov exponent over a list of seeds.
pub fn lyapunov_estimate(map: &CircleMap, sigma: f64, seeds: &[u64], x0: f64, n: usize) -> Result<LyapunovEstimate> {
    let per_seed: Vec<Result<(u64, Option<f64>)>> = seeds
        .par_iter()
        .map(|&seed| {
            let noise = NoiseStream::new(sigma, seed)?;
            let orbit = iterate_orbit(map, &noise, x0, n, &[])?;
            Ok((seed, finite_time_lyapunov(&orbit, n).ok()))
        })
        .collect();
    let per_seed: Vec<(u64, Option<f64>)> = per_seed.into_iter().collect::<Result<_>>()?;
    let vals: Vec<f64> = per_seed.iter().filter_map(|p| p.1).collect();
    let poisoned = per_seed.len() - vals.len();
    let std_err = if vals.len() > 1 { (variance(&vals) / vals.len() as f64).sqrt() } else { f64::NAN };
    Ok(LyapunovEstimate { n, mean: mean(&vals), std_err, poisoned, per_seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise_orbit_of_fixed_point() {
        // x = 0 is fixed by L sin(2πx) and |df(0)| = 6π
        let m = CircleMap::sine(3.0).unwrap();
        let noise = NoiseStream::new(0.0, 1).unwrap();
        let o = iterate_orbit(&m, &noise, 0.0, 10, &[0.05]).unwrap();
        assert!(o.points.iter().all(|&x| x == 0.0));
        let expect = 10.0 * (6.0 * std::f64::consts::PI).ln();
        assert!((o.s[10] - expect).abs() < 1e-12);
        assert_eq!(o.z[0][10], 0.0);
    }

    #[test]
    fn critical_hit_poisons_s() {
        let m = CircleMap::sine(3.0).unwrap();
        let noise = NoiseStream::new(0.0, 1).unwrap();
        let o = iterate_orbit(&m, &noise, 0.25, 5, &[0.01]).unwrap();
        assert_eq!(o.singular_at, Some(0));
        assert!(o.s[1..].iter().all(|&v| v == f64::NEG_INFINITY));
        assert!(matches!(finite_time_lyapunov(&o, 3), Err(Error::SingularHit { index: 0 })));
        assert!(o.clamped >= 1);
    }

    #[test]
    fn n_zero_orbit() {
        let m = CircleMap::sine(3.0).unwrap();
        let noise = NoiseStream::new(0.2, 1).unwrap();
        let o = iterate_orbit(&m, &noise, 0.3, 0, &[0.1]).unwrap();
        assert_eq!(o.points, vec![0.3]);
        assert_eq!(o.s, vec![0.0]);
        assert_eq!(o.z[0], vec![0.0]);
    }

    #[test]
    fn rejects_bad_delta() {
        let m = CircleMap::sine(3.0).unwrap();
        let noise = NoiseStream::new(0.2, 1).unwrap();
        assert!(iterate_orbit(&m, &noise, 0.3, 5, &[0.0]).is_err());
        assert!(iterate_orbit(&m, &noise, f64::NAN, 5, &[0.1]).is_err());
    }

    #[test]
    fn sums_match_naive_recomputation() {
        let m = CircleMap::sine(5.0).unwrap();
        let noise = NoiseStream::new(0.45, 12).unwrap();
        let o = iterate_orbit(&m, &noise, 0.123, 500, &[0.01]).unwrap();
        let mut x = 0.123f64;
        let mut s = 0.0;
        let mut z = 0.0;
        for i in 0..500 {
            let w = noise.draw(i);
            s += m.deriv(x + w).abs().ln();
            let d = crate::circle::circle_dist(x + w, 0.25).min(crate::circle::circle_dist(x + w, 0.75));
            z += if d > 0.01 { 0.0 } else { -d.ln() };
            x = crate::circle::wrap(5.0 * (2.0 * std::f64::consts::PI * (x + w)).sin());
        }
        assert!((o.s[500] - s).abs() < 1e-9 * s.abs());
        assert!((o.z[0][500] - z).abs() < 1e-9 * z.abs().max(1.0));
        assert!((o.points[500] - x).abs() < 1e-15 || o.points[500] == x);
    }
}
