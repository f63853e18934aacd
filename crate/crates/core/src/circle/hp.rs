//! Multi-precision arithmetic helpers for long-horizon forward iteration.

use astro_float::{BigFloat, Consts, RoundingMode, Sign};

const RM: RoundingMode = RoundingMode::ToEven;

/// Working precision plus cached constants.
pub struct Hp {
    pub prec: usize,
    consts: Consts,
    two_pi: BigFloat,
}

impl Hp {
    pub fn new(prec_bits: usize) -> Self {
        let prec = prec_bits.max(128).div_ceil(64) * 64;
        let mut consts = Consts::new().expect("constant cache");
        let pi = consts.pi(prec + 64, RM);
        let two_pi = pi.mul(&BigFloat::from_f64(2.0, prec + 64), prec + 64, RM);
        Hp { prec, consts, two_pi }
    }

    pub fn num(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, self.prec)
    }

    pub fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, self.prec, RM)
    }

    pub fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, self.prec, RM)
    }

    pub fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, self.prec, RM)
    }

    pub fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, self.prec, RM)
    }

    pub fn two_pi_times(&self, a: &BigFloat) -> BigFloat {
        a.mul(&self.two_pi, self.prec + 32, RM)
    }

    pub fn sin(&mut self, a: &BigFloat) -> BigFloat {
        a.sin(self.prec, RM, &mut self.consts)
    }

    pub fn cos(&mut self, a: &BigFloat) -> BigFloat {
        a.cos(self.prec, RM, &mut self.consts)
    }

    /// Fractional part in `[0, 1)`.
    pub fn wrap(&self, a: &BigFloat) -> BigFloat {
        let f = a.floor();
        a.sub(&f, self.prec, RM)
    }
}

/// Nearest-below `f64` of a multi-precision number (truncated mantissa).
pub fn to_f64(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let Some((words, _, sign, exp, _)) = x.as_raw_parts() else {
        return f64::NAN;
    };
    let top = *words.last().unwrap_or(&0);
    let v = (top as f64) / 18_446_744_073_709_551_616.0 * 2f64.powi(exp);
    if sign == Sign::Neg {
        -v
    } else {
        v
    }
}
