use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::orbit::iterate_orbit;
use crate::circle::{derive_seed, noise::unit, CircleMap, NoiseStream};
use crate::error::{invalid, Result};
use crate::stats::{weighted_line_fit, wilson, Z95};

/// Large-deviation events tracked by [`tail_probability`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailEvent {
    /// `S_n < λ n`.
    SBelow { lambda: f64 },
    /// `Z_n(δ) > H n`.
    ZAbove { delta: f64, h: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailConfig {
    pub event: TailEvent,
    pub n_list: Vec<usize>,
    pub trials: usize,
    pub base_seed: u64,
    /// Fixed starting point; when absent each trial draws a uniform start.
    pub x0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalPoint {
    pub n: usize,
    pub count: usize,
    pub trials: usize,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub event: TailEvent,
    pub points: Vec<SurvivalPoint>,
    /// Orbits dropped after a critical hit.
    pub poisoned: usize,
    /// Slope of `log p̂` against `n` (inverse-variance weights), when at
    /// least two points are positive.
    pub slope: Option<f64>,
    pub slope_se: Option<f64>,
}

impl SurvivalCurve {
    pub fn is_nonincreasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].p_hat <= w[0].p_hat)
    }

    /// Upper end of the 95% band for the slope.
    pub fn slope_upper95(&self) -> Option<f64> {
        Some(self.slope? + Z95 * self.slope_se?)
    }
}

/// Per-`n` frequencies of the event over independent noise seeds.
pub fn tail_probability(map: &CircleMap, sigma: f64, cfg: &TailConfig) -> Result<SurvivalCurve> {
    if cfg.n_list.is_empty() || cfg.n_list.contains(&0) {
        return invalid("n_list must be non-empty with positive entries");
    }
    if cfg.trials == 0 {
        return invalid("trials must be positive");
    }
    let n_max = *cfg.n_list.iter().max().unwrap_or(&0);
    let deltas = match cfg.event {
        TailEvent::ZAbove { delta, .. } => vec![delta],
        TailEvent::SBelow { .. } => vec![],
    };
    let outcomes: Vec<Result<Option<Vec<bool>>>> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            let seed = derive_seed(cfg.base_seed, t);
            let noise = NoiseStream::new(sigma, seed)?;
            let x0 = cfg.x0.unwrap_or_else(|| unit(derive_seed(seed, 0x5eed), 0));
            let orbit = iterate_orbit(map, &noise, x0, n_max, &deltas)?;
            Ok(match cfg.event {
                TailEvent::SBelow { lambda } => {
                    if orbit.is_poisoned() {
                        None
                    } else {
                        Some(cfg.n_list.iter().map(|&n| orbit.s[n] < lambda * n as f64).collect())
                    }
                }
                TailEvent::ZAbove { h, .. } => Some(cfg.n_list.iter().map(|&n| orbit.z[0][n] > h * n as f64).collect()),
            })
        })
        .collect();
    let outcomes: Vec<Option<Vec<bool>>> = outcomes.into_iter().collect::<Result<_>>()?;
    let kept: Vec<&Vec<bool>> = outcomes.iter().flatten().collect();
    let poisoned = outcomes.len() - kept.len();
    let trials = kept.len();
    let points: Vec<SurvivalPoint> = cfg
        .n_list
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let count = kept.iter().filter(|o| o[k]).count();
            let (ci_lo, ci_hi) = wilson(count, trials, Z95);
            SurvivalPoint { n, count, trials, p_hat: count as f64 / trials.max(1) as f64, ci_lo, ci_hi }
        })
        .collect();
    let pos: Vec<&SurvivalPoint> = points.iter().filter(|p| p.count > 0 && p.count < p.trials).collect();
    let (slope, slope_se) = if pos.len() >= 2 {
        let x: Vec<f64> = pos.iter().map(|p| p.n as f64).collect();
        let y: Vec<f64> = pos.iter().map(|p| p.p_hat.ln()).collect();
        // var(log p̂) ≈ (1 - p) / (trials p)
        let w: Vec<f64> = pos.iter().map(|p| p.trials as f64 * p.p_hat / (1.0 - p.p_hat)).collect();
        match weighted_line_fit(&x, &y, &w, true) {
            Some(f) => (Some(f.slope), Some(f.slope_se)),
            None => (None, None),
        }
    } else {
        (None, None)
    };
    Ok(SurvivalCurve { event: cfg.event, points, poisoned, slope, slope_se })
}
