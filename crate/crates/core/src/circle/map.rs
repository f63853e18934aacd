use std::f64::consts::PI;

use astro_float::BigFloat;
use serde::{Deserialize, Serialize};

use super::geometry::{circle_dist, wrap};
use super::hp::Hp;
use super::roots::{periodic_roots, BISECT_TOL, SCAN_POINTS};
use super::spline::PeriodicSpline;
use crate::error::{invalid, Error, Result};

/// Distance below which a point counts as a critical hit.
pub const CRITICAL_HIT_TOL: f64 = 1e-13;

/// Floor applied to truncated distances.
pub const DIST_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Sine,
    SineShifted,
    Table,
    Linear,
}

/// Constants `(B, β)` of the non-degeneracy conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regularity {
    #[serde(rename = "B")]
    pub b: f64,
    pub beta: f64,
}

/// JSON description of a map.
///
/// ```json
/// {"family": "sine", "L": 5.0, "sigma": 0.45, "regularity": {"B": 197.4, "beta": 1.0}}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub family: Family,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    /// Slope of the `linear` family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularity: Option<Regularity>,
    /// Samples `F(i/n)` of the lift for the `table` family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    /// Degree of the tabulated lift.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<i64>,
}

impl MapSpec {
    pub fn sine(l: f64) -> Self {
        MapSpec {
            family: Family::Sine,
            l: Some(l),
            a: None,
            k: None,
            sigma: None,
            regularity: None,
            values: None,
            degree: None,
        }
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Sine { l: f64, a: f64 },
    Linear { k: f64, a: f64 },
    Table(PeriodicSpline),
}

/// Truncated distance `dist_δ` together with a flag telling whether the
/// floor was applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedDistance {
    pub value: f64,
    pub clamped: bool,
}

/// A circle endomorphism `f(x) = F(x) mod 1` given by its lift `F`.
#[derive(Debug, Clone)]
pub struct CircleMap {
    spec: MapSpec,
    kind: Kind,
    critical: Vec<f64>,
    nondiff: Vec<f64>,
    singular: Vec<f64>,
    inflections: Vec<f64>,
    sup_log_deriv: f64,
    regularity: Regularity,
}

impl CircleMap {
    /// `F(x) = L sin(2πx)`.
    pub fn sine(l: f64) -> Result<Self> {
        Self::from_spec(&MapSpec::sine(l))
    }

    /// `F(x) = L sin(2πx) + a`.
    pub fn sine_shifted(l: f64, a: f64) -> Result<Self> {
        Self::from_spec(&MapSpec { family: Family::SineShifted, a: Some(a), ..MapSpec::sine(l) })
    }

    /// `F(x) = k x + a` with integer `k`.
    pub fn linear(k: i64, a: f64) -> Result<Self> {
        Self::from_spec(&MapSpec { family: Family::Linear, l: None, k: Some(k), a: Some(a), ..MapSpec::sine(0.0) })
    }

    /// Tabulated lift `values[i] = F(i/n)` with periodic cubic interpolation.
    pub fn table(values: Vec<f64>, degree: i64) -> Result<Self> {
        Self::from_spec(&MapSpec {
            family: Family::Table,
            l: None,
            values: Some(values),
            degree: Some(degree),
            ..MapSpec::sine(0.0)
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: MapSpec = serde_json::from_str(text)?;
        Self::from_spec(&spec)
    }

    pub fn from_spec(spec: &MapSpec) -> Result<Self> {
        let finite = |v: Option<f64>, name: &str| -> Result<Option<f64>> {
            match v {
                Some(x) if !x.is_finite() => invalid(format!("{name} must be finite")),
                other => Ok(other),
            }
        };
        finite(spec.l, "L")?;
        finite(spec.a, "a")?;
        if let Some(s) = spec.sigma {
            if !(0.0..=0.5).contains(&s) {
                return invalid(format!("sigma = {s} must lie in [0, 1/2]"));
            }
        }
        let kind = match spec.family {
            Family::Sine | Family::SineShifted => {
                let l = spec.l.ok_or_else(|| Error::InvalidArgument("sine family needs L".into()))?;
                if l <= 0.0 {
                    return invalid(format!("L = {l} must be positive"));
                }
                let a = if spec.family == Family::Sine {
                    if spec.a.unwrap_or(0.0) != 0.0 {
                        return invalid("the sine family has a = 0; use sine_shifted");
                    }
                    0.0
                } else {
                    spec.a.unwrap_or(0.0)
                };
                Kind::Sine { l, a }
            }
            Family::Linear => {
                let k = spec.k.ok_or_else(|| Error::InvalidArgument("linear family needs k".into()))?;
                if k == 0 {
                    return invalid("linear family needs k != 0");
                }
                Kind::Linear { k: k as f64, a: spec.a.unwrap_or(0.0) }
            }
            Family::Table => {
                let values =
                    spec.values.as_ref().ok_or_else(|| Error::InvalidArgument("table family needs values".into()))?;
                Kind::Table(PeriodicSpline::new(values, spec.degree.unwrap_or(0))?)
            }
        };
        let mut map = CircleMap {
            spec: spec.clone(),
            kind,
            critical: Vec::new(),
            nondiff: Vec::new(),
            singular: Vec::new(),
            inflections: Vec::new(),
            sup_log_deriv: 0.0,
            regularity: Regularity { b: 1.0, beta: 1.0 },
        };
        match &map.kind {
            Kind::Sine { l, .. } => {
                map.critical = vec![0.25, 0.75];
                map.inflections = vec![0.0, 0.5];
                map.sup_log_deriv = (2.0 * PI * l).ln();
                map.regularity = Regularity { b: 4.0 * PI * PI * l, beta: 1.0 };
            }
            Kind::Linear { k, .. } => {
                map.sup_log_deriv = k.abs().ln();
                map.regularity = Regularity { b: 1.0, beta: 1.0 };
            }
            Kind::Table(s) => {
                map.critical = periodic_roots(|x| s.deriv(x), SCAN_POINTS, BISECT_TOL);
                map.inflections = periodic_roots(|x| s.deriv2(x), SCAN_POINTS, BISECT_TOL);
                let n = 1 << 16;
                let mut sup = (0..n).map(|i| s.deriv(i as f64 / n as f64).abs()).fold(0.0, f64::max);
                for &p in &map.inflections {
                    sup = sup.max(s.deriv(p).abs());
                }
                if sup <= 0.0 {
                    return invalid("tabulated map has vanishing derivative");
                }
                map.sup_log_deriv = sup.ln() + 1e-9;
                map.regularity = Regularity { b: 0.0, beta: 1.0 };
            }
        }
        let mut singular = map.critical.clone();
        singular.extend(map.nondiff.iter().copied());
        singular.sort_by(f64::total_cmp);
        map.singular = singular;
        if let Some(r) = spec.regularity {
            if !(r.beta > 0.0) || !r.beta.is_finite() {
                return invalid(format!("beta = {} must be positive", r.beta));
            }
            if !(r.b > 0.0) || !r.b.is_finite() {
                return invalid(format!("B = {} must be positive", r.b));
            }
            map.regularity = r;
        } else if map.regularity.b == 0.0 {
            map.regularity = super::regularity::estimate_regularity(&map, 1.0, 4096);
        }
        Ok(map)
    }

    pub fn spec(&self) -> &MapSpec {
        &self.spec
    }

    pub fn family(&self) -> Family {
        self.spec.family
    }

    /// Sigma embedded in the map description, if any.
    pub fn sigma_hint(&self) -> Option<f64> {
        self.spec.sigma
    }

    pub fn degree(&self) -> f64 {
        match &self.kind {
            Kind::Sine { .. } => 0.0,
            Kind::Linear { k, .. } => *k,
            Kind::Table(s) => s.degree(),
        }
    }

    /// The lift `F`.
    #[inline]
    pub fn lift(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Sine { l, a } => l * (2.0 * PI * x).sin() + a,
            Kind::Linear { k, a } => k * x + a,
            Kind::Table(s) => s.eval(x),
        }
    }

    #[inline]
    pub fn deriv(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Sine { l, .. } => 2.0 * PI * l * (2.0 * PI * x).cos(),
            Kind::Linear { k, .. } => *k,
            Kind::Table(s) => s.deriv(x),
        }
    }

    #[inline]
    pub fn deriv2(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Sine { l, .. } => -4.0 * PI * PI * l * (2.0 * PI * x).sin(),
            Kind::Linear { .. } => 0.0,
            Kind::Table(s) => s.deriv2(x),
        }
    }

    /// `f(x) = F(x) mod 1`.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        wrap(self.lift(x))
    }

    /// `f_ω(x) = f(x + ω)`.
    #[inline]
    pub fn step(&self, x: f64, w: f64) -> f64 {
        wrap(self.lift(x + w))
    }

    /// Critical points, sorted in `[0, 1)`.
    pub fn critical_set(&self) -> &[f64] {
        &self.critical
    }

    /// Points of non-differentiability, sorted in `[0, 1)`.
    pub fn nondiff_set(&self) -> &[f64] {
        &self.nondiff
    }

    /// The singular set `𝒮𝒞`.
    pub fn singular_set(&self) -> &[f64] {
        &self.singular
    }

    /// Zeros of `d²f`, where `|df|` may have interior extrema.
    pub fn inflections(&self) -> &[f64] {
        &self.inflections
    }

    /// An upper bound `A ≥ sup log|df|`.
    pub fn sup_log_deriv(&self) -> f64 {
        self.sup_log_deriv
    }

    pub fn regularity(&self) -> Regularity {
        self.regularity
    }

    pub fn with_regularity(mut self, r: Regularity) -> Result<Self> {
        if !(r.beta > 0.0) || !(r.b > 0.0) {
            return invalid("regularity constants must be positive");
        }
        self.regularity = r;
        self.spec.regularity = Some(r);
        Ok(self)
    }

    fn dist_to(set: &[f64], y: f64) -> f64 {
        set.iter().map(|&c| circle_dist(y, c)).fold(f64::INFINITY, f64::min)
    }

    /// Distance from `y` to `𝒮𝒞`; infinite when the singular set is empty.
    #[inline]
    pub fn dist_to_singular(&self, y: f64) -> f64 {
        Self::dist_to(&self.singular, y)
    }

    #[inline]
    pub fn dist_to_critical(&self, y: f64) -> f64 {
        Self::dist_to(&self.critical, y)
    }

    /// `log|df(x + ω)|`, or `-∞` on a critical hit.
    pub fn log_abs_derivative(&self, x: f64, w: f64) -> Result<f64> {
        let y = x + w;
        if !self.nondiff.is_empty() && Self::dist_to(&self.nondiff, y) < CRITICAL_HIT_TOL {
            return Err(Error::NonDifferentiable { x: wrap(y) });
        }
        if !self.critical.is_empty() && self.dist_to_critical(y) < CRITICAL_HIT_TOL {
            return Ok(f64::NEG_INFINITY);
        }
        let d = self.deriv(y).abs();
        Ok(if d == 0.0 { f64::NEG_INFINITY } else { d.ln() })
    }

    /// `dist_δ(x, 𝒮𝒞_ω)` where `𝒮𝒞_ω = 𝒮𝒞 - ω`.
    pub fn truncated_distance(&self, x: f64, w: f64, delta: f64) -> TruncatedDistance {
        let d = self.dist_to_singular(x + w);
        if d > delta {
            TruncatedDistance { value: 1.0, clamped: false }
        } else if d < DIST_FLOOR {
            TruncatedDistance { value: DIST_FLOOR, clamped: true }
        } else {
            TruncatedDistance { value: d, clamped: false }
        }
    }

    /// Minimum of `|df|` over the lifted interval `[lo, hi]`.
    pub fn min_abs_deriv_on(&self, lo: f64, hi: f64) -> f64 {
        if hi - lo >= 1.0 {
            return if self.critical.is_empty() { self.global_min_abs_deriv() } else { 0.0 };
        }
        let mut m = self.deriv(lo).abs().min(self.deriv(hi).abs());
        let inside = |p: f64| {
            let k = (lo - p).ceil();
            p + k <= hi
        };
        if self.critical.iter().any(|&c| inside(c)) {
            return 0.0;
        }
        for &p in &self.inflections {
            if inside(p) {
                let k = (lo - p).ceil();
                m = m.min(self.deriv(p + k).abs());
            }
        }
        m
    }

    /// Components of `{|df| > r}` as lifted arcs `(lo, hi)` with
    /// `lo ∈ [0, 1)`, split at points of non-differentiability. The flag is
    /// set when the set is the whole circle.
    pub fn superlevel_arcs(&self, r: f64) -> (bool, Vec<(f64, f64)>) {
        let mut cuts = periodic_roots(|x| self.deriv(x).abs() - r, SCAN_POINTS, BISECT_TOL);
        cuts.extend(self.nondiff.iter().copied());
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        if cuts.is_empty() {
            let whole = self.deriv(0.0).abs() > r;
            return (whole, if whole { vec![(0.0, 1.0)] } else { Vec::new() });
        }
        let n = cuts.len();
        let mut arcs = Vec::new();
        for i in 0..n {
            let lo = cuts[i];
            let hi = if i + 1 < n { cuts[i + 1] } else { cuts[0] + 1.0 };
            if hi <= lo {
                continue;
            }
            if self.deriv(0.5 * (lo + hi)).abs() > r {
                arcs.push((lo, hi));
            }
        }
        (false, arcs)
    }

    fn global_min_abs_deriv(&self) -> f64 {
        let mut m = self.deriv(0.0).abs();
        for &p in &self.inflections {
            m = m.min(self.deriv(p).abs());
        }
        m
    }

    /// The lift evaluated in multi-precision.
    pub fn lift_hp(&self, y: &BigFloat, hp: &mut Hp) -> BigFloat {
        match &self.kind {
            Kind::Sine { l, a } => {
                let s = {
                    let arg = hp.two_pi_times(y);
                    hp.sin(&arg)
                };
                hp.add(&hp.mul(&hp.num(*l), &s), &hp.num(*a))
            }
            Kind::Linear { k, a } => hp.add(&hp.mul(&hp.num(*k), y), &hp.num(*a)),
            Kind::Table(s) => {
                let (c, t) = Self::table_segment_hp(s, y, hp);
                let mut acc = hp.num(c[3]);
                for i in (0..3).rev() {
                    acc = hp.add(&hp.mul(&acc, &t), &hp.num(c[i]));
                }
                hp.add(&acc, &hp.mul(&hp.num(s.degree()), y))
            }
        }
    }

    /// `dF` evaluated in multi-precision.
    pub fn deriv_hp(&self, y: &BigFloat, hp: &mut Hp) -> BigFloat {
        match &self.kind {
            Kind::Sine { l, .. } => {
                let arg = hp.two_pi_times(y);
                let c = hp.cos(&arg);
                hp.mul(&hp.num(2.0 * PI * l), &c)
            }
            Kind::Linear { k, .. } => hp.num(*k),
            Kind::Table(s) => {
                let (c, t) = Self::table_segment_hp(s, y, hp);
                let n = s.len() as f64;
                let mut acc = hp.num(3.0 * c[3]);
                acc = hp.add(&hp.mul(&acc, &t), &hp.num(2.0 * c[2]));
                acc = hp.add(&hp.mul(&acc, &t), &hp.num(c[1]));
                hp.add(&hp.mul(&acc, &hp.num(n)), &hp.num(s.degree()))
            }
        }
    }

    fn table_segment_hp(s: &PeriodicSpline, y: &BigFloat, hp: &Hp) -> ([f64; 4], BigFloat) {
        let frac = hp.wrap(y);
        let n = s.len();
        let u = hp.mul(&frac, &hp.num(n as f64));
        let j = (super::hp::to_f64(&u).floor().max(0.0) as usize).min(n - 1);
        let t = hp.sub(&u, &hp.num(j as f64));
        (s.segment(j), t)
    }
}
