//! Full-branch times `m(ω, I)`.

use serde::{Deserialize, Serialize};

use super::branch::{BranchConfig, BranchTracker, DEFAULT_BRANCH_CAP, EPS_BRANCH};
use crate::circle::{Arc, CircleMap, NoiseStream};
use crate::error::{invalid, Error, Result};

/// Relative margin by which the per-step expansion floor exceeds `κ`.
pub const FLOOR_MARGIN: f64 = 1e-6;

/// Whether the arc itself must lie in `{|dg_ω| > 1}` at the first step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FirstStepPolicy {
    Relaxed,
    Enforce,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullBranchConfig {
    pub kappa: f64,
    pub n_max: usize,
    pub first_step: FirstStepPolicy,
    pub eps_branch: f64,
    pub cap: usize,
}

impl FullBranchConfig {
    pub fn new(kappa: f64, n_max: usize) -> Self {
        FullBranchConfig {
            kappa,
            n_max,
            first_step: FirstStepPolicy::Relaxed,
            eps_branch: EPS_BRANCH,
            cap: DEFAULT_BRANCH_CAP,
        }
    }

    /// Branch configuration keeping only points where every step expands by
    /// more than `κ`.
    pub fn branch_config(&self) -> BranchConfig {
        BranchConfig { floor: Some(self.kappa * (1.0 + FLOOR_MARGIN)), eps_branch: self.eps_branch, cap: self.cap }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.kappa > 1.0) || !self.kappa.is_finite() {
            return invalid(format!("kappa = {} must exceed 1", self.kappa));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullBranchHit {
    pub m: usize,
    /// Lifted sub-interval `J ⊂ I` with `g^m_ω(J) = S¹`.
    pub witness: (f64, f64),
    pub image_length: f64,
    pub min_log_deriv: f64,
    pub branches: usize,
}

pub(crate) fn check_first_step(map: &CircleMap, noise: &NoiseStream, source: &Arc) -> Result<()> {
    let w = noise.draw(0);
    let md = map.min_abs_deriv_on(source.lo + w, source.hi + w);
    if md <= 1.0 {
        return Err(Error::NotExpanding { min_abs_deriv: md });
    }
    Ok(())
}

/// Least `n ≤ n_max` for which some `J ⊂ I` is mapped by `g^n_ω` onto the
/// circle with derivative exceeding `κ` at every step.
pub fn full_branch_time(
    map: &CircleMap,
    noise: &NoiseStream,
    source: Arc,
    cfg: &FullBranchConfig,
) -> Result<FullBranchHit> {
    cfg.validate()?;
    if source.length() >= 1.0 {
        return Ok(FullBranchHit {
            m: 0,
            witness: (source.lo, source.hi),
            image_length: 1.0,
            min_log_deriv: 0.0,
            branches: 1,
        });
    }
    if cfg.first_step == FirstStepPolicy::Enforce {
        check_first_step(map, noise, &source)?;
    }
    let mut tracker = BranchTracker::new(map, *noise, (source.lo, source.hi), cfg.branch_config())?;
    let log_kappa = cfg.kappa.ln();
    let mut longest: f64 = source.length();
    for n in 1..=cfg.n_max {
        tracker.step()?;
        longest = longest.max(tracker.max_image_length());
        let best = tracker
            .current()
            .iter()
            .enumerate()
            .filter(|(_, nd)| nd.image_length() >= 1.0 && nd.min_log_deriv > log_kappa)
            .max_by(|a, b| a.1.image_length().total_cmp(&b.1.image_length()).then(b.0.cmp(&a.0)));
        if let Some((idx, node)) = best {
            let (witness, _) = tracker.pullback(idx, (node.image.0, node.image.0 + 1.0))?;
            return Ok(FullBranchHit {
                m: n,
                witness,
                image_length: node.image_length(),
                min_log_deriv: node.min_log_deriv,
                branches: tracker.len(),
            });
        }
        if tracker.is_empty() {
            break;
        }
    }
    Err(Error::Timeout { n_max: cfg.n_max, max_image_length: longest })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_circle_has_time_zero() {
        let m = CircleMap::sine(5.0).unwrap();
        let noise = NoiseStream::new(0.45, 1).unwrap();
        let hit = full_branch_time(&m, &noise, Arc::full(), &FullBranchConfig::new(1.5, 10)).unwrap();
        assert_eq!(hit.m, 0);
    }

    #[test]
    fn finds_a_covering_witness() {
        let m = CircleMap::sine(5.0).unwrap();
        let noise = NoiseStream::new(0.45, 0).unwrap();
        let hit = full_branch_time(&m, &noise, Arc::new(0.1, 0.2).unwrap(), &FullBranchConfig::new(1.5, 50)).unwrap();
        assert!(hit.m >= 1 && hit.m <= 50);
        assert!(hit.image_length >= 1.0);
        assert!(hit.min_log_deriv > 1.5f64.ln());
        assert!(hit.witness.0 >= 0.1 && hit.witness.1 <= 0.2);
        // forward images of a dense sample of J are 2e-3-dense in the circle
        let k = 1000;
        let mut ys: Vec<f64> = (0..k)
            .map(|s| {
                let mut y = hit.witness.0 + (hit.witness.1 - hit.witness.0) * s as f64 / (k - 1) as f64;
                for i in 0..hit.m {
                    y = m.step(y, noise.draw(i));
                }
                y
            })
            .collect();
        ys.sort_by(f64::total_cmp);
        let mut gap = ys[0] + 1.0 - ys[k - 1];
        for w in ys.windows(2) {
            gap = gap.max(w[1] - w[0]);
        }
        assert!(gap <= 2e-3, "largest gap {gap}");
    }

    #[test]
    fn tiny_horizon_times_out() {
        let m = CircleMap::sine(5.0).unwrap();
        let noise = NoiseStream::new(0.45, 0).unwrap();
        let r = full_branch_time(&m, &noise, Arc::new(0.1, 0.1 + 1e-9).unwrap(), &FullBranchConfig::new(1.5, 1));
        assert!(matches!(r, Err(Error::Timeout { n_max: 1, .. })));
    }

    #[test]
    fn enforce_rejects_interval_over_critical_point() {
        let m = CircleMap::sine(5.0).unwrap();
        let noise = NoiseStream::new(0.0, 0).unwrap();
        let mut cfg = FullBranchConfig::new(1.5, 10);
        cfg.first_step = FirstStepPolicy::Enforce;
        let r = full_branch_time(&m, &noise, Arc::new(0.2, 0.3).unwrap(), &cfg);
        assert!(matches!(r, Err(Error::NotExpanding { .. })));
        cfg.first_step = FirstStepPolicy::Relaxed;
        assert!(full_branch_time(&m, &noise, Arc::new(0.2, 0.3).unwrap(), &cfg).is_ok());
    }

    #[test]
    fn rejects_kappa_at_most_one() {
        let m = CircleMap::sine(5.0).unwrap();
        let noise = NoiseStream::new(0.45, 0).unwrap();
        assert!(full_branch_time(&m, &noise, Arc::new(0.1, 0.2).unwrap(), &FullBranchConfig::new(1.0, 10)).is_err());
    }
}
