//! Certification of `(σ, R)`-predominant expansion: super-expanding
//! components, the contracting integral, the admissible `h` window, the
//! reference interval `Δ` and its accessibility.

pub mod quadrature;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle::{derive_seed, wrap, Arc, CircleMap, NoiseStream};
use crate::error::{invalid, Error, Result};
use crate::horseshoe::{BranchConfig, BranchTracker};

/// Radius of the closed-form window around each critical point.
pub const LOCAL_RADIUS: f64 = 1e-4;

/// Accepted range of `|df(c ± r)| / (|d²f(c)| r)` for the local model.
pub const FIT_BAND: (f64, f64) = (0.9, 1.1);

/// Width of the band around the sine threshold where verdicts may differ.
pub const SINE_BAND: f64 = 1e-3;

const QUAD_TOL: f64 = 1e-14;
const DEGENERATE_D2: f64 = 1e-8;

/// Connected components of `G = {|df| > R}`.
pub fn expanding_components(map: &CircleMap, r: f64) -> Vec<Arc> {
    let (_, arcs) = map.superlevel_arcs(r);
    arcs.into_iter().map(|(lo, hi)| Arc { lo, hi }).collect()
}

/// Components of `{|df| ≤ r}` as lifted intervals.
fn sublevel_intervals(map: &CircleMap, r: f64) -> Vec<(f64, f64)> {
    let (whole, above) = map.superlevel_arcs(r);
    if whole {
        return Vec::new();
    }
    if above.is_empty() {
        return vec![(0.0, 1.0)];
    }
    let n = above.len();
    (0..n)
        .map(|i| {
            let lo = above[i].1;
            let hi = if i + 1 < n { above[i + 1].0 } else { above[0].0 + 1.0 };
            (lo, hi)
        })
        .filter(|(lo, hi)| hi > lo)
        .collect()
}

fn points_in(set: &[f64], a: f64, b: f64) -> Vec<f64> {
    let mut out: Vec<f64> =
        set.iter().flat_map(|&c| (-1..=2).map(move |k| c + k as f64)).filter(|&c| c > a && c < b).collect();
    out.sort_by(f64::total_cmp);
    out
}

/// `V = −∫_C log|df|` over the contracting region `C = {|df| < 1}`.
pub fn contracting_log_integral(map: &CircleMap) -> Result<f64> {
    let log_df = |x: f64| map.deriv(x).abs().ln();
    let mut total = 0.0;
    for (a, b) in sublevel_intervals(map, 1.0) {
        let crit = points_in(map.critical_set(), a, b);
        let mut cuts = vec![a];
        cuts.extend(points_in(map.nondiff_set(), a, b));
        let mut windows = Vec::new();
        for (i, &c) in crit.iter().enumerate() {
            let prev = if i > 0 { crit[i - 1] } else { a };
            let next = crit.get(i + 1).copied().unwrap_or(b);
            let r = LOCAL_RADIUS.min(0.5 * (c - prev)).min(0.5 * (next - c));
            let kappa = map.deriv2(c).abs();
            if kappa < DEGENERATE_D2 {
                return Err(Error::NonIntegrable {
                    point: wrap(c),
                    detail: format!("|d2f| = {kappa:e} at a critical point"),
                });
            }
            for side in [c - r, c + r] {
                let ratio = map.deriv(side).abs() / (kappa * r);
                if !(FIT_BAND.0..=FIT_BAND.1).contains(&ratio) {
                    return Err(Error::NonIntegrable {
                        point: wrap(c),
                        detail: format!("local model mismatch: |df(c±r)|/(|d2f(c)| r) = {ratio}"),
                    });
                }
            }
            total += 2.0 * r * ((kappa * r).ln() - 1.0);
            windows.push((c - r, c + r));
            cuts.push(c - r);
            cuts.push(c + r);
        }
        cuts.push(b);
        cuts.sort_by(f64::total_cmp);
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if hi <= lo || windows.iter().any(|&(p, q)| lo >= p && hi <= q) {
                continue;
            }
            total += quadrature::integrate(log_df, lo, hi, QUAD_TOL).value;
        }
    }
    Ok((-total).max(0.0))
}

/// `(D(R)/(2σ), 1 − V/(2σ log R))` when nonempty.
pub fn admissible_h(d_r: f64, v: f64, sigma: f64, r: f64) -> Option<(f64, f64)> {
    let lo = d_r / (2.0 * sigma);
    let hi = 1.0 - v / (2.0 * sigma * r.ln());
    (lo < hi && lo < 1.0 && hi > 0.0).then_some((lo.max(0.0), hi.min(1.0)))
}

/// `Z(h) = log R (1 − h) − V/(2σ)`.
pub fn z_of_h(h: f64, v: f64, sigma: f64, r: f64) -> f64 {
    r.ln() * (1.0 - h) - v / (2.0 * sigma)
}

/// `Z̄(h) = log R (1 − h) − (α + 1) V/(2σ)`.
pub fn zbar_of_h(h: f64, alpha: f64, v: f64, sigma: f64, r: f64) -> f64 {
    r.ln() * (1.0 - h) - (alpha + 1.0) * v / (2.0 * sigma)
}

/// Half of the largest `α` keeping `Z̄(h)` positive.
pub fn default_alpha(h: f64, v: f64, sigma: f64, r: f64) -> Option<f64> {
    if v == 0.0 {
        return Some(1.0);
    }
    let sup = 2.0 * sigma * r.ln() * (1.0 - h) / v - 1.0;
    (sup > 0.0).then_some(0.5 * sup)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaReference {
    pub arc: Arc,
    pub image_length: f64,
    pub min_abs_deriv: f64,
}

/// `Δ` of length `1/R` centred in the largest component of `G`, with its
/// cover verified by the branch tracker.
pub fn delta_reference(map: &CircleMap, r: f64) -> Result<DeltaReference> {
    let comps = expanding_components(map, r);
    let Some(g) = comps.iter().max_by(|a, b| a.length().total_cmp(&b.length())) else {
        return invalid(format!("G = {{|df| > {r}}} is empty"));
    };
    if g.length() < 1.0 / r {
        return invalid(format!("largest component of G has length {} < 1/R", g.length()));
    }
    let c = g.midpoint();
    let arc = Arc::ball(c, 0.5 / r);
    let noise = NoiseStream::new(0.0, 0)?;
    let mut tracker = BranchTracker::new(map, noise, (arc.lo, arc.hi), BranchConfig::default())?;
    tracker.step()?;
    let image_length = tracker.max_image_length();
    let min_abs_deriv = map.min_abs_deriv_on(arc.lo, arc.hi);
    if tracker.len() != 1 || image_length < 1.0 {
        return Err(Error::CoverFailed { image_length });
    }
    Ok(DeltaReference { arc, image_length, min_abs_deriv })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Accessibility {
    pub gamma: f64,
    /// Length of `Δ(γ)`.
    pub inner_length: f64,
    /// Smallest per-point frequency over the grid.
    pub min_frequency: f64,
    pub worst_x: f64,
    /// `min_x (p̂_x − 3 SE_x)`, floored at 0.
    pub q: f64,
    pub grid: usize,
    pub trials: usize,
}

/// Monte Carlo lower bound for `P(x + ω₀ ∈ E(γ) and f_ω(x) ∈ Δ(γ))`
/// uniformly over a grid of `x`.
pub fn accessibility_probability(
    map: &CircleMap,
    sigma: f64,
    r: f64,
    gamma: f64,
    grid: usize,
    trials: usize,
    seed: u64,
) -> Result<Accessibility> {
    if grid == 0 || trials == 0 || !(gamma >= 0.0) {
        return invalid("grid and trials must be positive and gamma nonnegative");
    }
    let delta = delta_reference(map, r)?.arc;
    let expanding = expanding_components(map, 1.0);
    let whole_e = map.superlevel_arcs(1.0).0;
    let inner_length = (delta.length() - 2.0 * gamma).max(0.0);
    let freqs: Vec<(f64, f64)> = (0..grid)
        .into_par_iter()
        .map(|i| -> Result<(f64, f64)> {
            let x = i as f64 / grid as f64;
            let noise = NoiseStream::new(sigma, derive_seed(seed, i as u64))?;
            let mut hits = 0usize;
            if inner_length > 0.0 {
                for t in 0..trials {
                    let w = noise.draw(t);
                    let y = x + w;
                    let in_e = whole_e || expanding.iter().any(|a| a.depth(y) > gamma);
                    if in_e && delta.depth(map.eval(y)) > gamma {
                        hits += 1;
                    }
                }
            }
            Ok((x, hits as f64 / trials as f64))
        })
        .collect::<Result<_>>()?;
    let (worst_x, min_frequency) = freqs.iter().copied().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap_or((0.0, 0.0));
    let q = freqs
        .iter()
        .map(|&(_, p)| p - 3.0 * (p * (1.0 - p) / trials as f64).sqrt())
        .fold(f64::INFINITY, f64::min)
        .max(0.0);
    Ok(Accessibility { gamma, inner_length, min_frequency, worst_x, q, grid, trials })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckItems {
    /// Bounded first and second derivatives away from `𝒮`.
    pub smooth: bool,
    /// Critical points are nondegenerate and the contracting integral exists.
    pub nondegenerate: bool,
    /// `G` is nonempty and every component has length at least `1/R`.
    pub components_large: bool,
    pub item1: bool,
    pub item2: bool,
    pub item3: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredominanceReport {
    #[serde(rename = "R")]
    pub r: f64,
    pub sigma: f64,
    pub components: Vec<Arc>,
    #[serde(rename = "D_R")]
    pub d_r: f64,
    #[serde(rename = "V")]
    pub v: Option<f64>,
    pub check_items: CheckItems,
    /// Left side of the item-2 inequality.
    pub ref_margin: Option<f64>,
    /// `σ − 1/R − D(R)`.
    pub noise_margin: f64,
    pub pass: bool,
    pub h_window: Option<(f64, f64)>,
    pub h: Option<f64>,
    #[serde(rename = "Z_h")]
    pub z_h: Option<f64>,
    pub alpha: Option<f64>,
    #[serde(rename = "Zbar_h")]
    pub zbar_h: Option<f64>,
    pub delta_arc: Option<DeltaReference>,
    pub q_access: Option<Accessibility>,
    /// The system passes but no admissible `h` exists.
    pub inconsistent: bool,
    pub notes: Vec<String>,
}

/// Evaluates items 1–3 of `(σ, R)`-predominant expansion and the derived
/// constants.
pub fn certify(map: &CircleMap, sigma: f64, r: f64) -> Result<PredominanceReport> {
    if !(sigma > 0.0 && sigma < 0.5) {
        return invalid(format!("sigma = {sigma} must lie in (0, 1/2)"));
    }
    if !(r > 2.0) {
        return invalid(format!("R = {r} must exceed 2"));
    }
    let mut notes = Vec::new();
    let components = expanding_components(map, r);
    let d_r = (1.0 - components.iter().map(Arc::length).sum::<f64>()).max(0.0);
    let smooth = (0..4096).all(|i| {
        let x = i as f64 / 4096.0;
        map.deriv(x).is_finite() && map.deriv2(x).is_finite()
    });
    let mut nondegenerate = map.critical_set().iter().all(|&c| map.deriv2(c).abs() >= DEGENERATE_D2);
    let v = match contracting_log_integral(map) {
        Ok(v) => Some(v),
        Err(Error::NonIntegrable { point, detail }) => {
            nondegenerate = false;
            notes.push(format!("contracting integral not computed at {point}: {detail}"));
            None
        }
        Err(e) => return Err(e),
    };
    let components_large = !components.is_empty() && components.iter().all(|g| g.length() >= 1.0 / r);
    let item1 = smooth && nondegenerate && components_large;
    let ref_margin = v.map(|v| -v / r.ln() + 2.0 / r + d_r);
    let item2 = ref_margin.is_some_and(|m| m > 0.0);
    let noise_margin = sigma - 1.0 / r - d_r;
    let item3 = noise_margin > 0.0;
    let pass = item1 && item2 && item3;
    let h_window = v.and_then(|v| admissible_h(d_r, v, sigma, r));
    let h = h_window.map(|(a, b)| 0.5 * (a + b));
    let (z_h, alpha, zbar_h) = match (h, v) {
        (Some(h), Some(v)) => {
            let alpha = default_alpha(h, v, sigma, r);
            (Some(z_of_h(h, v, sigma, r)), alpha, alpha.map(|a| zbar_of_h(h, a, v, sigma, r)))
        }
        _ => (None, None, None),
    };
    let delta_arc = if components_large {
        match delta_reference(map, r) {
            Ok(d) => Some(d),
            Err(e) => {
                notes.push(format!("reference interval: {e}"));
                None
            }
        }
    } else {
        None
    };
    let q_access = match (&delta_arc, pass) {
        (Some(d), true) => Some(accessibility_probability(map, sigma, r, d.arc.length() / 8.0, 256, 2000, 0)?),
        _ => None,
    };
    let inconsistent = pass && h_window.is_none();
    if inconsistent {
        notes.push("items 2 and 3 hold but no admissible h exists".into());
    }
    Ok(PredominanceReport {
        r,
        sigma,
        components,
        d_r,
        v,
        check_items: CheckItems { smooth, nondegenerate, components_large, item1, item2, item3 },
        ref_margin,
        noise_margin,
        pass,
        h_window,
        h,
        z_h,
        alpha,
        zbar_h,
        delta_arc,
        q_access,
        inconsistent,
        notes,
    })
}

/// `c₁ = 4π / √(16π² − 1)`.
pub fn sine_c1() -> f64 {
    4.0 * PI / (16.0 * PI * PI - 1.0).sqrt()
}

/// `1/R + c₁ R / (π² L)`.
pub fn sine_threshold(l: f64, r: f64) -> f64 {
    1.0 / r + sine_c1() * r / (PI * PI * l)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SineCertificate {
    #[serde(rename = "L")]
    pub l: f64,
    pub sigma: f64,
    /// `max{3, √L}`.
    #[serde(rename = "R")]
    pub r: f64,
    pub c1: f64,
    pub threshold: f64,
    pub closed_form_pass: bool,
    pub quadrature_pass: bool,
    /// `|σ − threshold| < 10⁻³`.
    pub in_band: bool,
    pub agree: bool,
    /// The alternative `R = min{3, √L}` and its threshold.
    pub r_min_alternative: f64,
    pub threshold_min_alternative: f64,
    pub report: PredominanceReport,
}

/// Closed-form and quadrature certification of `L sin(2πx)`.
pub fn certify_sine_family(l: f64, sigma: f64) -> Result<SineCertificate> {
    if !(l >= 3.0) {
        return invalid(format!("L = {l} must be at least 3"));
    }
    let r = 3f64.max(l.sqrt());
    let r_alt = 3f64.min(l.sqrt());
    let threshold = sine_threshold(l, r);
    let map = CircleMap::sine(l)?;
    let report = certify(&map, sigma, r)?;
    let closed_form_pass = sigma > threshold;
    let quadrature_pass = report.pass;
    Ok(SineCertificate {
        l,
        sigma,
        r,
        c1: sine_c1(),
        threshold,
        closed_form_pass,
        quadrature_pass,
        in_band: (sigma - threshold).abs() < SINE_BAND,
        agree: closed_form_pass == quadrature_pass,
        r_min_alternative: r_alt,
        threshold_min_alternative: sine_threshold(l, r_alt),
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact_d(l: f64, r: f64) -> f64 {
        2.0 / PI * (r / (2.0 * PI * l)).asin()
    }

    #[test]
    fn uniformly_expanding_map_has_no_contraction() {
        let m = CircleMap::linear(3, 0.1).unwrap();
        assert_eq!(contracting_log_integral(&m).unwrap(), 0.0);
        assert_eq!(admissible_h(0.0, 0.0, 0.4, 2.5), Some((0.0, 1.0)));
    }

    #[test]
    fn sine_d_matches_closed_form() {
        for l in [3.0f64, 9.0, 100.0] {
            let r = 3f64.max(l.sqrt());
            let m = CircleMap::sine(l).unwrap();
            let rep = certify(&m, 0.45, r).unwrap();
            assert!((rep.d_r - exact_d(l, r)).abs() < 1e-10, "L = {l}");
            assert_eq!(rep.components.len(), 2);
        }
    }

    #[test]
    fn small_noise_fails_item3() {
        let m = CircleMap::sine(9.0).unwrap();
        let rep = certify(&m, 0.01, 3.0).unwrap();
        assert!(!rep.check_items.item3 && !rep.pass);
    }

    #[test]
    fn nine_passes_with_positive_constants() {
        let m = CircleMap::sine(9.0).unwrap();
        let rep = certify(&m, 0.4, 3.0).unwrap();
        assert!(rep.pass, "{rep:?}");
        let (a, b) = rep.h_window.unwrap();
        assert!(a < b);
        assert!(rep.z_h.unwrap() > 0.0);
        assert!((rep.zbar_h.unwrap() - 0.5 * rep.z_h.unwrap()).abs() < 1e-12);
        assert!(rep.q_access.as_ref().unwrap().q > 0.0);
        let d = rep.delta_arc.unwrap();
        assert!(d.image_length >= 1.0 && d.min_abs_deriv >= 3.0);
    }

    #[test]
    fn delta_for_three_is_centred_on_a_component() {
        let m = CircleMap::sine(3.0).unwrap();
        let d = delta_reference(&m, 3.0).unwrap();
        let c = d.arc.midpoint();
        assert!(c.min(1.0 - c) < 1e-9 || (c - 0.5).abs() < 1e-9);
        assert!((d.arc.length() - 1.0 / 3.0).abs() < 1e-12);
        assert!(d.image_length >= 1.0);
    }

    #[test]
    fn degenerate_critical_point_is_non_integrable() {
        // df = 10 sin³(2πx) vanishes to third order at 0 and 1/2
        let vals: Vec<f64> = (0..512)
            .map(|i| {
                let c = (2.0 * PI * i as f64 / 512.0).cos();
                10.0 * (-c / (2.0 * PI) + c.powi(3) / (6.0 * PI))
            })
            .collect();
        let m = CircleMap::table(vals, 0).unwrap();
        assert!(matches!(contracting_log_integral(&m), Err(Error::NonIntegrable { .. })));
        let rep = certify(&m, 0.4, 2.5).unwrap();
        assert!(!rep.check_items.nondegenerate && rep.v.is_none());
    }

    #[test]
    fn gamma_beyond_half_delta_gives_zero() {
        let m = CircleMap::sine(5.0).unwrap();
        let a = accessibility_probability(&m, 0.45, 3.0, 0.2, 16, 100, 1).unwrap();
        assert_eq!(a.q, 0.0);
        assert_eq!(a.inner_length, 0.0);
    }

    #[test]
    fn sine_family_examples() {
        let c = certify_sine_family(9.0, 0.4).unwrap();
        assert_eq!(c.r, 3.0);
        assert!(c.closed_form_pass && c.quadrature_pass && c.agree);
        let c = certify_sine_family(3.0, 0.1).unwrap();
        assert!(!c.closed_form_pass && !c.quadrature_pass);
        let c = certify_sine_family(100.0, 0.2).unwrap();
        assert_eq!(c.r, 10.0);
        assert!(c.agree);
    }
}
