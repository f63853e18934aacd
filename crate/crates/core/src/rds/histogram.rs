use serde::{Deserialize, Serialize};

use crate::circle::{wrap, CircleMap, NoiseStream};
use crate::error::{invalid, Result};

/// Empirical stationary measure on `bins` equal bins of the circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramMeasure {
    pub bins: usize,
    pub burn_in: usize,
    pub samples: usize,
    pub x0: f64,
    pub mass: Vec<f64>,
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(p, q)| (p - q).abs()).sum::<f64>()
}

/// Time average of the orbit of `x0` after a burn-in.
pub fn stationary_histogram(
    map: &CircleMap,
    noise: &NoiseStream,
    x0: f64,
    bins: usize,
    burn_in: usize,
    samples: usize,
) -> Result<HistogramMeasure> {
    if bins < 16 {
        return invalid(format!("bins = {bins} must be at least 16"));
    }
    if samples < 10_000 {
        return invalid(format!("samples = {samples} must be at least 10^4"));
    }
    let mut counts = vec![0u64; bins];
    let mut x = wrap(x0);
    for i in 0..burn_in + samples {
        x = map.step(x, noise.draw(i));
        if i >= burn_in {
            let b = ((x * bins as f64) as usize).min(bins - 1);
            counts[b] += 1;
        }
    }
    let mass = counts.iter().map(|&c| c as f64 / samples as f64).collect();
    Ok(HistogramMeasure { bins, burn_in, samples, x0, mass })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStartReport {
    pub first: HistogramMeasure,
    pub second: HistogramMeasure,
    pub tv: f64,
}

/// Histograms from two starting points under the same noise schedule.
pub fn two_start_tv(
    map: &CircleMap,
    noise: &NoiseStream,
    starts: (f64, f64),
    bins: usize,
    burn_in: usize,
    samples: usize,
) -> Result<TwoStartReport> {
    let first = stationary_histogram(map, noise, starts.0, bins, burn_in, samples)?;
    let second = stationary_histogram(map, noise, starts.1, bins, burn_in, samples)?;
    let tv = total_variation(&first.mass, &second.mass);
    Ok(TwoStartReport { first, second, tv })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mass_sums_to_one() {
        let m = CircleMap::sine(5.0).unwrap();
        let noise = NoiseStream::new(0.45, 4).unwrap();
        let h = stationary_histogram(&m, &noise, 0.1, 64, 1000, 20_000).unwrap();
        let total: f64 = h.mass.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(h.mass.iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn two_starts_agree() {
        let m = CircleMap::sine(5.0).unwrap();
        let noise = NoiseStream::new(0.45, 4).unwrap();
        let r = two_start_tv(&m, &noise, (0.1, 0.77), 64, 1000, 200_000).unwrap();
        assert!(r.tv < 0.05, "tv = {}", r.tv);
    }

    #[test]
    fn full_noise_on_linear_map_gives_uniform_histogram() {
        // x + ω is uniform when σ = 1/2 and 3x preserves Lebesgue measure
        let m = CircleMap::linear(3, 0.0).unwrap();
        let noise = NoiseStream::new(0.5, 8).unwrap();
        let h = stationary_histogram(&m, &noise, 0.3, 16, 100, 160_000).unwrap();
        let tol = 5.0 * (1.0f64 / 16.0 * (15.0 / 16.0) / 160_000.0).sqrt();
        assert!(h.mass.iter().all(|&p| (p - 1.0 / 16.0).abs() < tol), "{:?}", h.mass);
    }

    #[test]
    fn preconditions() {
        let m = CircleMap::sine(5.0).unwrap();
        let noise = NoiseStream::new(0.45, 4).unwrap();
        assert!(stationary_histogram(&m, &noise, 0.1, 8, 10, 20_000).is_err());
        assert!(stationary_histogram(&m, &noise, 0.1, 32, 10, 100).is_err());
    }
}
