//! Finite-horizon symbol shadowing in multi-precision arithmetic.

use astro_float::BigFloat;
use serde::{Deserialize, Serialize};

use super::branch::{ChainStep, TAU_GEO};
use super::returns::HorseshoeRecord;
use crate::circle::hp::{to_f64, Hp};
use crate::circle::CircleMap;
use crate::error::{invalid, Error, Result};

const SEED_BITS: usize = 48;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowVisit {
    pub k: usize,
    pub time: usize,
    pub symbol: u8,
    pub position: f64,
    /// Signed depth inside `I_{s_k}`.
    pub depth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowResult {
    pub symbols: Vec<u8>,
    /// The shadowing point rounded to `f64`.
    pub x: f64,
    /// The shadowing point in decimal at working precision.
    pub x_decimal: String,
    /// `log10` of the length of the innermost nested arc.
    pub log10_width: f64,
    pub precision_bits: usize,
    pub visits: Vec<ShadowVisit>,
}

fn step_consts(hp: &Hp, map: &CircleMap, st: &ChainStep) -> (BigFloat, BigFloat) {
    let c = hp.add(&hp.num(st.shift), &hp.num(st.omega));
    let d = hp.num(map.degree() * st.shift);
    (c, d)
}

/// Solves `F(u + shift + ω) − deg·shift = t` on the step's piece.
fn solve_step(hp: &mut Hp, map: &CircleMap, st: &ChainStep, t: &BigFloat, full: usize) -> Result<BigFloat> {
    let tf = to_f64(t);
    let deg_shift = map.degree() * st.shift;
    let g = |u: f64| map.lift(u + st.shift + st.omega) - deg_shift - tf;
    let (lo_end, hi_end) = if st.increasing { (st.piece.0, st.piece.1) } else { (st.piece.1, st.piece.0) };
    let (mut a, mut b) = (lo_end, hi_end);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        if g(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let mut u = hp.num(0.5 * (a + b));
    let mut prec = SEED_BITS;
    loop {
        prec = (2 * prec).min(full);
        hp.prec = prec + 64;
        let (c, d) = step_consts(hp, map, st);
        for _ in 0..2 {
            let y = hp.add(&u, &c);
            let fy = map.lift_hp(&y, hp);
            let r = hp.sub(&hp.sub(&fy, &d), t);
            let dr = map.deriv_hp(&y, hp);
            u = hp.sub(&u, &hp.div(&r, &dr));
        }
        if prec == full {
            break;
        }
    }
    let uf = to_f64(&u);
    let (p0, p1) = st.piece;
    let slack = 1e-12 * (1.0 + p0.abs().max(p1.abs()));
    if !(uf >= p0 - slack && uf <= p1 + slack) {
        return Err(Error::VerificationFailed {
            k: 0,
            detail: format!("Newton left the branch piece: {uf} not in [{p0}, {p1}]"),
        });
    }
    Ok(u)
}

/// Working precision for a pullback through the first `k` return levels.
pub fn shadow_precision(map: &CircleMap, record: &HorseshoeRecord, levels: usize) -> usize {
    let steps = record.returns[levels] as f64;
    let bits = 128.0 + steps * map.sup_log_deriv().max(0.0) / std::f64::consts::LN_2;
    (bits.ceil() as usize).div_ceil(64) * 64
}

/// Constructs a point of `I_{s_0}` whose orbit visits `I_{s_k}` at every
/// return time `n_k` and verifies it by forward iteration.
pub fn shadow(map: &CircleMap, record: &HorseshoeRecord, symbols: &[u8]) -> Result<ShadowResult> {
    if symbols.is_empty() {
        return invalid("symbol sequence is empty");
    }
    if symbols.len() > record.returns.len() {
        return invalid(format!("{} symbols but only {} return times", symbols.len(), record.returns.len()));
    }
    if symbols.iter().any(|&s| s > 1) {
        return invalid("symbols must be 0 or 1");
    }
    let noise = record.noise()?;
    let levels = symbols.len() - 1;
    let full = shadow_precision(map, record, levels);
    let mut hp = Hp::new(full);
    let last = record.arcs[symbols[levels] as usize];
    let (mut lo, mut hi) = (hp.num(last.lo), hp.num(last.hi));
    let mut log10_width = last.length().log10();
    for k in (0..levels).rev() {
        let cyl = record.cylinder(k, symbols[k] as usize, symbols[k + 1] as usize);
        for (s, st) in cyl.steps.iter().enumerate() {
            if st.omega != noise.draw(cyl.start + s) {
                return Err(Error::VerificationFailed {
                    k,
                    detail: "cylinder noise does not match the record seed".into(),
                });
            }
        }
        let sh = hp.num(cyl.target_shift);
        let mut t = (hp.add(&lo, &sh), hp.add(&hi, &sh));
        for st in cyl.steps.iter().rev() {
            let u0 = solve_step(&mut hp, map, st, &t.0, full).map_err(|e| relabel(e, k))?;
            let u1 = solve_step(&mut hp, map, st, &t.1, full).map_err(|e| relabel(e, k))?;
            hp.prec = full + 64;
            let s = hp.num(st.shift);
            let (a, b) = (hp.add(&u0, &s), hp.add(&u1, &s));
            t = if to_f64(&hp.sub(&b, &a)) >= 0.0 { (a, b) } else { (b, a) };
        }
        hp.prec = full + 64;
        let w = to_f64(&hp.sub(&t.1, &t.0));
        if w > 0.0 {
            log10_width = w.log10();
        } else {
            let mut e = hp.sub(&t.1, &t.0);
            let mut scale = 0.0;
            let ten = hp.num(1e100);
            while !e.is_zero() && to_f64(&e) < 1e-200 {
                e = hp.mul(&e, &ten);
                scale += 100.0;
            }
            log10_width = if e.is_zero() { f64::NEG_INFINITY } else { to_f64(&e).log10() - scale };
        }
        (lo, hi) = t;
    }
    hp.prec = full + 64;
    let half = hp.num(0.5);
    let x = hp.wrap(&hp.mul(&hp.add(&lo, &hi), &half));
    let x_decimal = format!("{}", x);
    let xf = to_f64(&x);
    let mut visits = Vec::with_capacity(symbols.len());
    let mut y = x.clone();
    let mut time = 0usize;
    for (k, &sym) in symbols.iter().enumerate() {
        let target = record.returns[k];
        while time < target {
            let z = hp.add(&y, &hp.num(noise.draw(time)));
            let fz = map.lift_hp(&z, &mut hp);
            y = hp.wrap(&fz);
            time += 1;
        }
        let pos = to_f64(&y);
        let arc = record.arcs[sym as usize];
        let depth = arc.depth(pos);
        visits.push(ShadowVisit { k, time, symbol: sym, position: pos, depth });
        if depth < -TAU_GEO {
            return Err(Error::VerificationFailed {
                k,
                detail: format!("g^{time}(x) = {pos} lies outside I_{sym} = [{}, {}] by {}", arc.lo, arc.hi, -depth),
            });
        }
    }
    Ok(ShadowResult { symbols: symbols.to_vec(), x: xf, x_decimal, log10_width, precision_bits: full, visits })
}

fn relabel(e: Error, k: usize) -> Error {
    match e {
        Error::VerificationFailed { detail, .. } => Error::VerificationFailed { k, detail },
        other => other,
    }
}
