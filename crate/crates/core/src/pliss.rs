//! Pliss selection, hyperbolic times and their asymptotic frequency.

use serde::{Deserialize, Serialize};

use crate::circle::{circle_dist, wrap, Arc, CircleMap, NoiseStream};
use crate::error::{invalid, Error, Result};
use crate::horseshoe::{BranchConfig, BranchTracker};
use crate::rds::Orbit;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlissSelection {
    /// 1-based indices `n` with `Σ_{j=k}^{n} a_j ≥ 0` for every `k ≤ n`.
    pub indices: Vec<usize>,
    /// `c / A`.
    pub gamma: f64,
    pub c: f64,
    #[serde(rename = "A")]
    pub a_bound: f64,
    /// `Σ a_j ≥ c N`.
    pub hypothesis_holds: bool,
    /// `a_j ≤ A` for all `j`.
    pub bound_respected: bool,
}

impl PlissSelection {
    /// Whether the count meets `⌈γ N⌉` when the hypotheses hold.
    pub fn bound_met(&self, n: usize) -> bool {
        !(self.hypothesis_holds && self.bound_respected)
            || self.indices.len() >= (self.gamma * n as f64).ceil() as usize
    }
}

/// Selects every index whose hanging sums are all nonnegative.
///
/// With prefix sums `P`, `n` qualifies iff `P_n ≥ max_{i<n} P_i`.
pub fn pliss_select(a: &[f64], c: f64, a_bound: f64) -> Result<PlissSelection> {
    if !(c > 0.0 && c <= a_bound) {
        return invalid(format!("need 0 < c <= A, got c = {c}, A = {a_bound}"));
    }
    if a.iter().any(|v| v.is_nan()) {
        return invalid("sequence contains NaN");
    }
    let mut indices = Vec::new();
    let mut prefix = 0.0;
    let mut best = 0.0;
    for (j, &v) in a.iter().enumerate() {
        prefix += v;
        if prefix >= best {
            indices.push(j + 1);
            best = prefix;
        }
    }
    let total: f64 = a.iter().sum();
    Ok(PlissSelection {
        indices,
        gamma: c / a_bound,
        c,
        a_bound,
        hypothesis_holds: total >= c * a.len() as f64,
        bound_respected: a.iter().all(|&v| v <= a_bound),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicParams {
    pub kappa1: f64,
    pub delta: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicTimeRecord {
    pub times: Vec<usize>,
    pub kappa1: f64,
    pub delta: f64,
    pub b: f64,
}

/// Largest admissible exponent: `min{1/2, 1/(2β)}(1 − 10⁻⁶)`.
pub fn default_b(beta: f64) -> f64 {
    0.5f64.min(0.5 / beta) * (1.0 - 1e-6)
}

/// All `(κ₁, δ)`-hyperbolic times of the orbit: `n` such that for every
/// `0 < m ≤ n`, `S_n − S_{n−m} ≥ m log κ₁` and
/// `dist_δ(x_{n−m}, 𝒮𝒞) ≥ κ₁^{−b m}`.
pub fn hyperbolic_times(orbit: &Orbit, p: &HyperbolicParams) -> Result<HyperbolicTimeRecord> {
    if !(p.kappa1 > 1.0) {
        return invalid("kappa1 must exceed 1");
    }
    if !(p.b > 0.0) {
        return invalid("b must be positive");
    }
    let Some(k) = orbit.delta_index(p.delta) else {
        return invalid(format!("orbit carries no distance data for delta = {}", p.delta));
    };
    let nld = &orbit.neg_log_dist[k];
    let lk = p.kappa1.ln();
    let last = orbit.singular_at.unwrap_or(orbit.len()).min(orbit.len());
    let mut times = Vec::new();
    let mut max_t = f64::NEG_INFINITY;
    let mut max_u = f64::NEG_INFINITY;
    for n in 1..=last {
        let j = n - 1;
        max_t = max_t.max(orbit.s[j] - j as f64 * lk);
        max_u = max_u.max(nld[j] + p.b * j as f64 * lk);
        if orbit.s[n] - n as f64 * lk >= max_t && max_u <= p.b * n as f64 * lk {
            times.push(n);
        }
    }
    Ok(HyperbolicTimeRecord { times, kappa1: p.kappa1, delta: p.delta, b: p.b })
}

/// `H(δ) = √δ (1 + log(1/δ))`.
pub fn h_of_delta(delta: f64) -> f64 {
    delta.sqrt() * (1.0 + (1.0 / delta).ln())
}

/// The `δ ∈ (0, 1/e)` with `H(δ) = target`.
pub fn delta_for_h(target: f64) -> Result<f64> {
    let top = (-1.0f64).exp();
    if !(target > 0.0 && target < h_of_delta(top)) {
        return invalid(format!("H target {target} out of range"));
    }
    let (mut lo, mut hi) = (0.0f64, top);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if h_of_delta(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBound {
    pub lambda: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    pub h_delta: f64,
    /// `λ / (2A)`.
    pub gamma1: f64,
    /// `1 − 8H(δ)/λ`.
    pub gamma2_unscaled: f64,
    /// `1 − 8H(δ)/(bλ)`.
    pub gamma2_consistent: f64,
    pub gamma2: f64,
    /// `γ₁ + γ₂ − 1`.
    pub gamma: f64,
    /// `e^{λ/8}`.
    pub kappa1: f64,
}

impl FrequencyBound {
    /// Bound with `δ` chosen so that `H(δ)` is half of `γ₁ b λ / 8`.
    pub fn new(lambda: f64, a: f64, b: f64) -> Result<Self> {
        if !(lambda > 0.0 && a > 0.0 && lambda <= 2.0 * a) {
            return invalid(format!("need 0 < lambda <= 2A, got lambda = {lambda}, A = {a}"));
        }
        let gamma1 = lambda / (2.0 * a);
        let delta = delta_for_h(0.5 * gamma1 * b * lambda / 8.0)?;
        Self::with_delta(lambda, a, b, delta)
    }

    pub fn with_delta(lambda: f64, a: f64, b: f64, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return invalid("delta must lie in (0, 1)");
        }
        if !(b > 0.0 && b < 0.5) {
            return invalid("b must lie in (0, 1/2)");
        }
        let gamma1 = lambda / (2.0 * a);
        let h = h_of_delta(delta);
        let g2p = 1.0 - 8.0 * h / lambda;
        let g2c = 1.0 - 8.0 * h / (b * lambda);
        let gamma2 = g2p.min(g2c);
        Ok(FrequencyBound {
            lambda,
            a,
            b,
            delta,
            h_delta: h,
            gamma1,
            gamma2_unscaled: g2p,
            gamma2_consistent: g2c,
            gamma2,
            gamma: gamma1 + gamma2 - 1.0,
            kappa1: (lambda / 8.0).exp(),
        })
    }

    pub fn params(&self) -> HyperbolicParams {
        HyperbolicParams { kappa1: self.kappa1, delta: self.delta, b: self.b }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyReport {
    pub n: usize,
    pub s_n: f64,
    pub z_n: f64,
    pub hypotheses_met: bool,
    pub count: usize,
    pub required: f64,
    pub violation: bool,
}

/// Counts hyperbolic times in `{1, …, N}` and compares with `γ N`.
pub fn frequency_check(orbit: &Orbit, fb: &FrequencyBound, n: usize) -> Result<FrequencyReport> {
    if n == 0 || n > orbit.len() {
        return invalid(format!("N = {n} must lie in 1..={}", orbit.len()));
    }
    let z = orbit
        .z_for(fb.delta)
        .ok_or_else(|| Error::InvalidArgument(format!("orbit carries no distance data for delta = {}", fb.delta)))?;
    let s_n = orbit.s[n];
    let z_n = z[n];
    let hypotheses_met = s_n > fb.lambda * n as f64 && z_n < fb.h_delta * n as f64;
    let rec = hyperbolic_times(orbit, &fb.params())?;
    let count = rec.times.iter().filter(|&&t| t <= n).count();
    let required = fb.gamma * n as f64;
    Ok(FrequencyReport {
        n,
        s_n,
        z_n,
        hypotheses_met,
        count,
        required,
        violation: hypotheses_met && (count as f64) < required,
    })
}

/// Hyperbolic times `n` with `B(x₀, δ₁ κ₁^{−n/2}) ⊂ I`.
pub fn interval_hyperbolic_times(orbit: &Orbit, arc: &Arc, delta1: f64, p: &HyperbolicParams) -> Result<Vec<usize>> {
    if !arc.contains(orbit.x0) {
        return invalid("x0 must lie in I");
    }
    let depth = arc.depth(orbit.x0);
    let rec = hyperbolic_times(orbit, p)?;
    Ok(rec.times.into_iter().filter(|&n| delta1 * p.kappa1.powf(-(n as f64) / 2.0) <= depth).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallReport {
    pub n: usize,
    pub x: f64,
    /// Lifted `J ∋ x` with `g^n_ω(J) = B(g^n_ω x, δ₁)`.
    pub j: (f64, f64),
    pub j_length: f64,
    /// `2 δ₁ κ₁^{−n/2}`.
    pub length_bound: f64,
    /// Lower bound for `log|dg^n_ω|` on `J`.
    pub min_log_deriv: f64,
    /// `(n/2) log κ₁`.
    pub log_bound: f64,
    /// Largest endpoint mismatch of the forward image of `J` against the ball.
    pub image_error: f64,
    /// `g^i(J) ⊂ B(g^i x, δ₁ κ₁^{(i−n)/2})` for `0 < i < n`.
    pub containment: bool,
}

impl BallReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.image_error <= tol
            && self.j_length <= self.length_bound
            && self.min_log_deriv >= self.log_bound
            && self.containment
    }
}

/// Locates the interval around `x` mapped by `g^n_ω` onto `B(g^n_ω x, δ₁)`.
pub fn hyperbolic_ball_check(
    map: &CircleMap,
    noise: &NoiseStream,
    x: f64,
    n: usize,
    delta1: f64,
    kappa1: f64,
) -> Result<BallReport> {
    if n == 0 {
        return invalid("n must be positive");
    }
    if !(delta1 > 0.0 && delta1 < 0.25) || !(kappa1 > 1.0) {
        return invalid("need 0 < delta1 < 1/4 and kappa1 > 1");
    }
    let x = wrap(x);
    let mut orbit = vec![x];
    for i in 0..n {
        orbit.push(map.step(orbit[i], noise.draw(i)));
    }
    let src = Arc::ball(x, delta1);
    let x_lift = if x >= src.lo { x } else { x + 1.0 };
    let mut tracker = BranchTracker::new(map, *noise, (src.lo, src.hi), BranchConfig::default())?;
    for _ in 0..n {
        tracker.step()?;
    }
    let branches = tracker.branches()?;
    let idx = branches
        .iter()
        .position(|br| br.domain.0 <= x_lift && x_lift <= br.domain.1)
        .ok_or_else(|| Error::NotFound(format!("no monotone branch of depth {n} through x = {x}")))?;
    let br = &branches[idx];
    let yn = orbit[n];
    let mut best: Option<(f64, (f64, f64), Vec<crate::horseshoe::ChainStep>)> = None;
    let mut k = (br.image_lift.0 - yn).floor();
    while yn + k <= br.image_lift.1 + 1.0 {
        let y = yn + k;
        if y - delta1 >= br.image_lift.0 && y + delta1 <= br.image_lift.1 {
            let (dom, chain) = tracker.pullback(idx, (y - delta1, y + delta1))?;
            if dom.0 <= x_lift && x_lift <= dom.1 {
                let gap = (0.5 * (dom.0 + dom.1) - x_lift).abs();
                if best.as_ref().is_none_or(|b| gap < b.0) {
                    best = Some((gap, dom, chain));
                }
            }
        }
        k += 1.0;
    }
    let Some((_, j, chain)) = best else {
        return Err(Error::NotFound(format!("branch through x = {x} does not reach radius {delta1} at n = {n}")));
    };
    let mut min_log = 0.0;
    let mut containment = true;
    for (i, st) in chain.iter().enumerate() {
        let lo = st.pulled.0 + st.shift + st.omega;
        let hi = st.pulled.1 + st.shift + st.omega;
        min_log += map.min_abs_deriv_on(lo, hi).ln();
        if i > 0 {
            let r = delta1 * kappa1.powf((i as f64 - n as f64) / 2.0);
            let far = circle_dist(st.pulled.0 + st.shift, orbit[i]).max(circle_dist(st.pulled.1 + st.shift, orbit[i]));
            containment &= far <= r;
        }
    }
    let (mut a, mut b) = (j.0, j.1);
    for i in 0..n {
        let w = noise.draw(i);
        a = map.step(a, w);
        b = map.step(b, w);
    }
    let lo_ball = wrap(yn - delta1);
    let hi_ball = wrap(yn + delta1);
    let direct = circle_dist(a, lo_ball).max(circle_dist(b, hi_ball));
    let flipped = circle_dist(a, hi_ball).max(circle_dist(b, lo_ball));
    Ok(BallReport {
        n,
        x,
        j,
        j_length: j.1 - j.0,
        length_bound: 2.0 * delta1 * kappa1.powf(-(n as f64) / 2.0),
        min_log_deriv: min_log,
        log_bound: 0.5 * n as f64 * kappa1.ln(),
        image_error: direct.min(flipped),
        containment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rds::iterate_orbit;

    fn brute(a: &[f64]) -> Vec<usize> {
        (1..=a.len()).filter(|&n| (1..=n).all(|k| a[k - 1..n].iter().sum::<f64>() >= 0.0)).collect()
    }

    #[test]
    fn all_ones_select_everything() {
        let s = pliss_select(&[1.0; 4], 1.0, 1.0).unwrap();
        assert_eq!(s.indices, vec![1, 2, 3, 4]);
        assert_eq!(s.gamma, 1.0);
        assert!(s.bound_met(4));
    }

    #[test]
    fn alternating_sequence_matches_brute_force() {
        let a = [2.0, -1.0, 2.0, -1.0];
        let s = pliss_select(&a, 0.5, 2.0).unwrap();
        assert_eq!(s.indices, brute(&a));
        assert_eq!(s.indices, vec![1, 3]);
        assert!(s.hypothesis_holds && s.bound_met(4));
    }

    #[test]
    fn negative_sequence_flags_hypothesis() {
        let s = pliss_select(&[-1.0, -1.0], 0.5, 1.0).unwrap();
        assert!(s.indices.is_empty());
        assert!(!s.hypothesis_holds);
    }

    #[test]
    fn bound_violation_is_flagged() {
        let s = pliss_select(&[3.0, 1.0], 0.5, 1.0).unwrap();
        assert!(!s.bound_respected);
        assert_eq!(s.indices, vec![1, 2]);
    }

    #[test]
    fn fixed_point_orbit_is_always_hyperbolic() {
        let m = CircleMap::sine(3.0).unwrap();
        let noise = NoiseStream::new(0.0, 1).unwrap();
        let o = iterate_orbit(&m, &noise, 0.0, 50, &[0.1]).unwrap();
        let r = hyperbolic_times(&o, &HyperbolicParams { kappa1: 2.0, delta: 0.1, b: 0.4 }).unwrap();
        assert_eq!(r.times, (1..=50).collect::<Vec<_>>());
    }

    #[test]
    fn close_approach_rejects_time() {
        let noise = NoiseStream::new(0.0, 1).unwrap();
        let s = CircleMap::sine(3.0).unwrap();
        let o = iterate_orbit(&s, &noise, 0.2501, 1, &[0.1]).unwrap();
        let r = hyperbolic_times(&o, &HyperbolicParams { kappa1: 2.0, delta: 0.1, b: 0.4 }).unwrap();
        assert!(r.times.is_empty());
    }

    #[test]
    fn h_inverse_roundtrip() {
        for &t in &[1e-3, 0.01, 0.3] {
            let d = delta_for_h(t).unwrap();
            assert!((h_of_delta(d) - t).abs() < 1e-12);
        }
    }

    #[test]
    fn frequency_bound_constants() {
        let fb = FrequencyBound::new(2.0, 4.0, 0.25).unwrap();
        assert_eq!(fb.gamma1, 0.25);
        assert!((fb.h_delta - 0.25 * 0.25 * 2.0 / 16.0).abs() < 1e-12);
        assert!((fb.gamma2 - (1.0 - 0.125)).abs() < 1e-12);
        assert!((fb.gamma - 0.125).abs() < 1e-12);
        assert_eq!(fb.kappa1, 0.25f64.exp());
        assert!(fb.gamma2_consistent < fb.gamma2_unscaled);
    }

    #[test]
    fn constant_orbit_meets_frequency_bound() {
        let m = CircleMap::sine(3.0).unwrap();
        let noise = NoiseStream::new(0.0, 1).unwrap();
        let fb = FrequencyBound::new(2.0, (6.0 * std::f64::consts::PI).ln(), 0.4).unwrap();
        let o = iterate_orbit(&m, &noise, 0.0, 100, &[fb.delta]).unwrap();
        let r = frequency_check(&o, &fb, 100).unwrap();
        assert!(r.hypotheses_met);
        assert_eq!(r.count, 100);
        assert!(!r.violation);
        let fb = FrequencyBound::new(3.0, 3.5, 0.4).unwrap();
        let o = iterate_orbit(&m, &noise, 0.0, 100, &[fb.delta]).unwrap();
        assert!(!frequency_check(&o, &fb, 100).unwrap().hypotheses_met);
    }

    #[test]
    fn interval_times_edge_cases() {
        let m = CircleMap::sine(3.0).unwrap();
        let noise = NoiseStream::new(0.0, 1).unwrap();
        let p = HyperbolicParams { kappa1: 2.0, delta: 0.1, b: 0.4 };
        let o = iterate_orbit(&m, &noise, 0.0, 20, &[0.1]).unwrap();
        let all = hyperbolic_times(&o, &p).unwrap().times;
        assert_eq!(interval_hyperbolic_times(&o, &Arc::full(), 0.05, &p).unwrap(), all);
        assert!(interval_hyperbolic_times(&o, &Arc::new(0.0, 0.2).unwrap(), 0.05, &p).unwrap().is_empty());
        assert_eq!(interval_hyperbolic_times(&o, &Arc::new(-0.05, 0.05).unwrap(), 0.05, &p).unwrap(), all);
    }

    #[test]
    fn ball_at_fixed_point_matches_linearisation() {
        let m = CircleMap::sine(3.0).unwrap();
        let noise = NoiseStream::new(0.0, 1).unwrap();
        let d1 = 1e-3;
        let r = hyperbolic_ball_check(&m, &noise, 0.0, 3, d1, 2.0).unwrap();
        let lin = (6.0 * std::f64::consts::PI).powi(3);
        assert!((r.j_length - 2.0 * d1 / lin).abs() / (2.0 * d1 / lin) < 1e-3);
        assert!(r.passed(1e-9), "{r:?}");
    }

    #[test]
    fn ball_for_single_step_is_local_inverse() {
        let m = CircleMap::sine(5.0).unwrap();
        let noise = NoiseStream::new(0.45, 4).unwrap();
        let r = hyperbolic_ball_check(&m, &noise, 0.1, 1, 0.01, 1.2).unwrap();
        let w = noise.draw(0);
        let y = m.step(0.1, w);
        let a = m.step(r.j.0, w);
        let b = m.step(r.j.1, w);
        let d = circle_dist(a, y - 0.01).min(circle_dist(a, y + 0.01));
        let e = circle_dist(b, y - 0.01).min(circle_dist(b, y + 0.01));
        assert!(d < 1e-12 && e < 1e-12);
    }
}
