//! Return sequences `n_k` and the cylinders `J^{i,j}_k`.

use serde::{Deserialize, Serialize};

use super::branch::{BranchTracker, ChainStep, TAU_GEO};
use super::full::{check_first_step, FullBranchConfig};
use crate::circle::{Arc, CircleMap, NoiseStream};
use crate::error::{invalid, Error, Result};

/// Branches kept per tracker once its targets are covered.
pub const KEEP_AFTER_COVER: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorseshoeConfig {
    pub returns: usize,
    pub full_branch: FullBranchConfig,
}

/// `J ⊂ I_i`, read at time `start`, with `g^{depth}_{θ^{start}ω}(J) = I_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub k: usize,
    pub i: usize,
    pub j: usize,
    pub start: usize,
    pub depth: usize,
    /// Lifted domain inside the lift of `I_i`.
    pub domain: (f64, f64),
    /// Integer shift with `I_j + target_shift` inside the final image.
    pub target_shift: f64,
    pub min_log_deriv: f64,
    pub steps: Vec<ChainStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorseshoeRecord {
    pub seed: u64,
    pub sigma: f64,
    pub arcs: [Arc; 2],
    pub kappa: f64,
    /// Return times with a leading `0`: cylinders of level `k` run from
    /// `returns[k]` to `returns[k + 1]`.
    pub returns: Vec<usize>,
    /// `cylinders[k][2 i + j]`.
    pub cylinders: Vec<Vec<Cylinder>>,
}

impl HorseshoeRecord {
    pub fn increments(&self) -> Vec<usize> {
        self.returns.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn cylinder(&self, k: usize, i: usize, j: usize) -> &Cylinder {
        &self.cylinders[k][2 * i + j]
    }

    pub fn noise(&self) -> Result<NoiseStream> {
        NoiseStream::new(self.sigma, self.seed)
    }
}

fn containing(nodes: &[super::branch::Node], target: &Arc) -> Vec<(usize, f64)> {
    nodes.iter().enumerate().filter_map(|(i, n)| target.lift_into(n.image.0, n.image.1).map(|k| (i, k))).collect()
}

/// Steps the tracker until each target has a branch whose image contains
/// one of its lifts.
fn first_cover(tracker: &mut BranchTracker, targets: &[Arc; 2], n_max: usize) -> Result<usize> {
    for n in 1..=n_max {
        tracker.step()?;
        if targets.iter().all(|t| !containing(tracker.current(), t).is_empty()) {
            return Ok(n);
        }
        if tracker.is_empty() {
            break;
        }
    }
    Err(Error::Timeout { n_max, max_image_length: tracker.max_image_length() })
}

/// Builds the return times and the four cylinder families for `K` returns.
pub fn horseshoe_returns(
    map: &CircleMap,
    noise: &NoiseStream,
    arcs: [Arc; 2],
    cfg: &HorseshoeConfig,
) -> Result<HorseshoeRecord> {
    cfg.full_branch.validate()?;
    if cfg.returns == 0 {
        return invalid("at least one return is required");
    }
    if arcs[0].overlaps(&arcs[1]) {
        return invalid("I0 and I1 must be disjoint");
    }
    if arcs.iter().any(|a| a.length() <= 0.0 || a.length() >= 1.0) {
        return invalid("I0 and I1 must be proper arcs of positive length");
    }
    let fb = &cfg.full_branch;
    let log_kappa = fb.kappa.ln();
    let mut returns = vec![0usize];
    let mut cylinders = Vec::with_capacity(cfg.returns);
    for k in 0..cfg.returns {
        let start = *returns.last().expect("non-empty");
        let shifted = noise.shifted(start);
        let mut trackers = Vec::with_capacity(2);
        let mut times = [0usize; 2];
        for (i, arc) in arcs.iter().enumerate() {
            if fb.first_step == super::full::FirstStepPolicy::Enforce {
                check_first_step(map, &shifted, arc)?;
            }
            let mut t = BranchTracker::new(map, shifted, (arc.lo, arc.hi), fb.branch_config())?;
            times[i] = first_cover(&mut t, &arcs, fb.n_max)?;
            trackers.push(t);
        }
        let depth = times[0].max(times[1]);
        let mut level = Vec::with_capacity(4);
        for (i, tracker) in trackers.iter_mut().enumerate() {
            while tracker.depth() < depth {
                tracker.prune_to_longest(KEEP_AFTER_COVER);
                tracker.step()?;
            }
            for (j, target) in arcs.iter().enumerate() {
                let nodes = tracker.current();
                let pick = containing(nodes, target)
                    .into_iter()
                    .filter(|&(idx, _)| nodes[idx].min_log_deriv > log_kappa)
                    .max_by(|a, b| nodes[a.0].min_log_deriv.total_cmp(&nodes[b.0].min_log_deriv).then(b.0.cmp(&a.0)));
                let Some((idx, shift)) = pick else {
                    return Err(Error::CylinderNotFound { k, i, j });
                };
                let (domain, steps) = tracker.pullback(idx, (target.lo + shift, target.hi + shift))?;
                level.push(Cylinder {
                    k,
                    i,
                    j,
                    start,
                    depth,
                    domain,
                    target_shift: shift,
                    min_log_deriv: nodes[idx].min_log_deriv,
                    steps,
                });
            }
        }
        cylinders.push(level);
        returns.push(start + depth);
    }
    Ok(HorseshoeRecord { seed: noise.seed(), sigma: noise.sigma(), arcs, kappa: fb.kappa, returns, cylinders })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderCheck {
    pub k: usize,
    pub i: usize,
    pub j: usize,
    /// Largest stepwise mismatch between forward images and the next
    /// interval of the chain.
    pub endpoint_error: f64,
    /// Smallest depth of forward-iterated interior samples inside `I_j`.
    pub interior_depth: f64,
    /// Smallest sampled `log|dg^{depth}|` along interior samples.
    pub sampled_log_deriv: f64,
    pub passed: bool,
}

/// Re-verifies a cylinder by forward iteration.
pub fn verify_cylinder(
    map: &CircleMap,
    record: &HorseshoeRecord,
    cyl: &Cylinder,
    samples: usize,
) -> Result<CylinderCheck> {
    let noise = record.noise()?;
    let src = record.arcs[cyl.i];
    let dst = record.arcs[cyl.j];
    let deg = map.degree();
    let mut err: f64 = 0.0;
    if let Some(first) = cyl.steps.first() {
        err = err
            .max((first.pulled.0 + first.shift - cyl.domain.0).abs())
            .max((first.pulled.1 + first.shift - cyl.domain.1).abs());
    }
    for (s, st) in cyl.steps.iter().enumerate() {
        let w = noise.draw(cyl.start + s);
        let a = map.lift(st.pulled.0 + st.shift + w) - deg * st.shift;
        let b = map.lift(st.pulled.1 + st.shift + w) - deg * st.shift;
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let next = match cyl.steps.get(s + 1) {
            Some(n) => (n.pulled.0 + n.shift, n.pulled.1 + n.shift),
            None => (dst.lo + cyl.target_shift, dst.hi + cyl.target_shift),
        };
        err = err.max((a - next.0).abs()).max((b - next.1).abs());
    }
    let inside_src = cyl.domain.0 >= src.lo - TAU_GEO && cyl.domain.1 <= src.hi + TAU_GEO;
    let mut depth_min = f64::INFINITY;
    let mut logd_min = f64::INFINITY;
    for s in 0..samples {
        let mut y = cyl.domain.0 + (cyl.domain.1 - cyl.domain.0) * (s as f64 + 0.5) / samples as f64;
        let mut sum = 0.0;
        for t in 0..cyl.depth {
            let w = noise.draw(cyl.start + t);
            sum += map.deriv(y + w).abs().ln();
            y = map.step(y, w);
        }
        depth_min = depth_min.min(dst.depth(y));
        logd_min = logd_min.min(sum);
    }
    let passed = err <= TAU_GEO
        && inside_src
        && depth_min > -TAU_GEO
        && logd_min > record.kappa.ln()
        && cyl.min_log_deriv > record.kappa.ln();
    Ok(CylinderCheck {
        k: cyl.k,
        i: cyl.i,
        j: cyl.j,
        endpoint_error: err,
        interior_depth: depth_min,
        sampled_log_deriv: logd_min,
        passed,
    })
}
