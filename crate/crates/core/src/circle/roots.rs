//! Sign-change scanning and bisection on the periodic interval `[0, 1)`.

/// Number of scan points used by default.
pub const SCAN_POINTS: usize = 1 << 14;

/// Default bisection tolerance.
pub const BISECT_TOL: f64 = 1e-12;

/// Root of `g` in `[a, b]` given `g(a)` and `g(b)` of opposite sign.
pub fn bisect(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut ga = g(a);
    if ga == 0.0 {
        return a;
    }
    if g(b) == 0.0 {
        return b;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if b - a <= tol || m <= a || m >= b {
            break;
        }
        let gm = g(m);
        if gm == 0.0 {
            return m;
        }
        if (gm > 0.0) == (ga > 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Sign changes of the 1-periodic function `g` located on an `n`-point grid
/// and refined by bisection. Roots are returned sorted in `[0, 1)`.
pub fn periodic_roots(g: impl Fn(f64) -> f64, n: usize, tol: f64) -> Vec<f64> {
    let xs: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    let mut roots = Vec::new();
    for i in 0..n {
        let (a, ga) = (xs[i], vals[i]);
        let (b, gb) = if i + 1 < n { (xs[i + 1], vals[i + 1]) } else { (1.0, vals[0]) };
        if ga == 0.0 {
            roots.push(a);
            continue;
        }
        if gb != 0.0 && (ga > 0.0) != (gb > 0.0) {
            let r = bisect(&g, a, b, tol);
            roots.push(if r >= 1.0 { r - 1.0 } else { r });
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() < tol);
    roots
}
