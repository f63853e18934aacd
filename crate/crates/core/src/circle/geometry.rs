use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Reduce `x` to `[0, 1)`.
#[inline]
pub fn wrap(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Geodesic distance on the circle of length one.
#[inline]
pub fn circle_dist(x: f64, y: f64) -> f64 {
    let d = wrap(x - y);
    d.min(1.0 - d)
}

/// A point of the circle, stored in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct CirclePoint(f64);

impl CirclePoint {
    pub fn new(x: f64) -> Self {
        CirclePoint(wrap(x))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn translate(self, w: f64) -> Self {
        CirclePoint::new(self.0 + w)
    }

    pub fn dist(self, other: CirclePoint) -> f64 {
        circle_dist(self.0, other.0)
    }
}

/// A closed arc given by lifted endpoints `lo ≤ hi ≤ lo + 1`, normalised so
/// that `lo ∈ [0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub lo: f64,
    pub hi: f64,
}

impl Arc {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return invalid("arc endpoints must be finite");
        }
        if hi < lo || hi - lo > 1.0 {
            return invalid(format!("arc [{lo}, {hi}] must satisfy lo <= hi <= lo + 1"));
        }
        let k = lo.floor();
        Ok(Arc { lo: lo - k, hi: hi - k })
    }

    /// Arc running counter-clockwise from `a` to `b` (both read mod 1).
    pub fn from_endpoints(a: f64, b: f64) -> Result<Self> {
        let lo = wrap(a);
        let mut hi = wrap(b);
        if hi < lo {
            hi += 1.0;
        }
        Arc::new(lo, hi)
    }

    pub fn full() -> Self {
        Arc { lo: 0.0, hi: 1.0 }
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        wrap(0.5 * (self.lo + self.hi))
    }

    pub fn contains(&self, x: f64) -> bool {
        self.length() >= 1.0 || wrap(x - self.lo) <= self.length()
    }

    /// Signed depth of `x` inside the arc: positive inside, negative outside
    /// (distance to the nearest endpoint).
    pub fn depth(&self, x: f64) -> f64 {
        if self.length() >= 1.0 {
            return f64::INFINITY;
        }
        let d_lo = circle_dist(x, self.lo);
        let d_hi = circle_dist(x, self.hi);
        let m = d_lo.min(d_hi);
        if self.contains(x) {
            m
        } else {
            -m
        }
    }

    /// Integer shift `k` with `[lo + k, hi + k] ⊂ [a, b]`, if any. The
    /// smallest admissible shift is returned.
    pub fn lift_into(&self, a: f64, b: f64) -> Option<f64> {
        let k = (a - self.lo).ceil();
        if self.hi + k <= b {
            Some(k)
        } else {
            None
        }
    }

    pub fn overlaps(&self, other: &Arc) -> bool {
        if self.length() >= 1.0 || other.length() >= 1.0 {
            return true;
        }
        self.contains(other.lo) || self.contains(other.hi) || other.contains(self.lo)
    }

    /// Ball of radius `r` around `x`, capped at the full circle.
    pub fn ball(x: f64, r: f64) -> Self {
        if 2.0 * r >= 1.0 {
            return Arc::full();
        }
        let c = wrap(x);
        let lo = c - r;
        let k = lo.floor();
        Arc { lo: lo - k, hi: c + r - k }
    }

    /// Whether `inner ⊂ self` on the circle.
    pub fn contains_arc(&self, inner: &Arc) -> bool {
        if self.length() >= 1.0 {
            return true;
        }
        if inner.length() > self.length() {
            return false;
        }
        let s = wrap(inner.lo - self.lo);
        s + inner.length() <= self.length()
    }
}
