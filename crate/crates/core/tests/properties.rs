mod common;

use proptest::prelude::*;

use circle_rds::certifier::{contracting_log_integral, expanding_components};
use circle_rds::circle::{circle_dist, wrap, Arc, CircleMap, NoiseStream};
use circle_rds::horseshoe::{full_branch_time, refine_branches, BranchConfig, FullBranchConfig};
use circle_rds::pliss::{default_b, hyperbolic_times, pliss_select, HyperbolicParams};
use circle_rds::rds::iterate_orbit;
use circle_rds::stats::{wilson, Z95};

use common::pliss_brute;

fn sine5() -> CircleMap {
    CircleMap::sine(5.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn pliss_on_dyadic_values_matches_brute_force(ks in prop::collection::vec(-8i32..=8, 1..40), c_num in 1i32..=8) {
        let a: Vec<f64> = ks.iter().map(|&k| k as f64 / 8.0).collect();
        let c = c_num as f64 / 8.0;
        let sel = pliss_select(&a, c, 1.0).unwrap();
        prop_assert_eq!(&sel.indices, &pliss_brute(&a));
        prop_assert!(sel.bound_met(a.len()));
    }

    #[test]
    fn pliss_indices_are_sorted_and_end_at_the_maximum(xs in prop::collection::vec(-1.0f64..1.0, 1..64)) {
        let sel = pliss_select(&xs, 0.5, 1.0).unwrap();
        prop_assert!(sel.indices.windows(2).all(|w| w[0] < w[1]));
        let prefix: Vec<f64> = xs.iter().scan(0.0, |s, v| { *s += v; Some(*s) }).collect();
        let best = prefix.iter().cloned().fold(0.0f64, f64::max);
        if best > 0.0 {
            let argmax = prefix.iter().rposition(|&p| p == best).unwrap() + 1;
            prop_assert_eq!(sel.indices.last().copied(), Some(argmax));
        }
    }

    #[test]
    fn noise_stays_in_range_and_shift_is_an_offset(sigma in 0.0f64..=0.5, seed in any::<u64>(), k in 0usize..1000, i in 0usize..1000) {
        let noise = NoiseStream::new(sigma, seed).unwrap();
        let w = noise.draw(i);
        prop_assert!(w >= -sigma && w <= sigma);
        prop_assert_eq!(noise.shifted(k).draw(i), noise.draw(k + i));
    }

    #[test]
    fn wrap_lands_in_unit_interval(x in -1e6f64..1e6) {
        let y = wrap(x);
        prop_assert!((0.0..1.0).contains(&y));
        prop_assert!(circle_dist(x, y) < 1e-9);
    }

    #[test]
    fn truncated_distance_is_capped_and_exact_inside(x in 0.0f64..1.0, w in -0.5f64..0.5, delta in 1e-4f64..0.25) {
        let map = sine5();
        let td = map.truncated_distance(x, w, delta);
        let d = map.dist_to_singular(x + w);
        prop_assert!(td.value <= 1.0);
        if d <= delta && d >= 1e-15 {
            prop_assert_eq!(td.value, d);
        } else if d > delta {
            prop_assert_eq!(td.value, 1.0);
        }
    }

    #[test]
    fn lyapunov_sums_are_additive(seed in 0u64..10_000, x0 in 0.0f64..1.0, m in 1usize..300, rest in 1usize..300) {
        let map = sine5();
        let noise = NoiseStream::new(0.45, seed).unwrap();
        let whole = iterate_orbit(&map, &noise, x0, m + rest, &[]).unwrap();
        prop_assume!(!whole.is_poisoned());
        let head = iterate_orbit(&map, &noise, x0, m, &[]).unwrap();
        let tail = iterate_orbit(&map, &noise.shifted(m), head.points[m], rest, &[]).unwrap();
        prop_assert_eq!(tail.points[rest], whole.points[m + rest]);
        let sum = head.s[m] + tail.s[rest];
        prop_assert!((whole.s[m + rest] - sum).abs() <= 1e-9 * whole.s[m + rest].abs().max(1.0));
    }

    #[test]
    fn hyperbolic_times_shrink_as_kappa_grows_without_close_approaches(seed in 0u64..10_000, r1 in 0.01f64..0.5, extra in 0.0f64..0.5) {
        let map = sine5();
        let noise = NoiseStream::new(0.45, seed).unwrap();
        let delta = 1e-9;
        let orbit = iterate_orbit(&map, &noise, 0.3, 300, &[delta]).unwrap();
        prop_assume!(orbit.neg_log_dist[0].iter().all(|&v| v == 0.0));
        let b = default_b(1.0);
        let weak = hyperbolic_times(&orbit, &HyperbolicParams { kappa1: r1.exp(), delta, b }).unwrap().times;
        let strong = hyperbolic_times(&orbit, &HyperbolicParams { kappa1: (r1 + extra).exp(), delta, b }).unwrap().times;
        prop_assert!(strong.iter().all(|t| weak.binary_search(t).is_ok()));
    }

    #[test]
    fn hyperbolic_times_grow_with_b(seed in 0u64..10_000, rate in 0.01f64..0.5, b1 in 0.01f64..0.49, frac in 0.0f64..1.0, delta in 0.01f64..0.3) {
        let map = sine5();
        let noise = NoiseStream::new(0.45, seed).unwrap();
        let orbit = iterate_orbit(&map, &noise, 0.3, 300, &[delta]).unwrap();
        let b2 = b1 + frac * (0.499 - b1);
        let small = hyperbolic_times(&orbit, &HyperbolicParams { kappa1: rate.exp(), delta, b: b1 }).unwrap().times;
        let large = hyperbolic_times(&orbit, &HyperbolicParams { kappa1: rate.exp(), delta, b: b2 }).unwrap().times;
        prop_assert!(small.iter().all(|t| large.binary_search(t).is_ok()));
    }

    #[test]
    fn hyperbolic_times_shrink_as_delta_grows(seed in 0u64..10_000, rate in 0.01f64..0.5, d1 in 0.001f64..0.2, frac in 0.0f64..1.0) {
        let map = sine5();
        let noise = NoiseStream::new(0.45, seed).unwrap();
        let d2 = d1 + frac * (0.24 - d1);
        let orbit = iterate_orbit(&map, &noise, 0.3, 300, &[d1, d2]).unwrap();
        let b = default_b(1.0);
        let narrow = hyperbolic_times(&orbit, &HyperbolicParams { kappa1: rate.exp(), delta: d1, b }).unwrap().times;
        let wide = hyperbolic_times(&orbit, &HyperbolicParams { kappa1: rate.exp(), delta: d2, b }).unwrap().times;
        prop_assert!(wide.iter().all(|t| narrow.binary_search(t).is_ok()));
    }

    #[test]
    fn z_is_monotone_in_delta(seed in 0u64..10_000, d1 in 0.001f64..0.2, frac in 0.0f64..1.0) {
        let map = sine5();
        let noise = NoiseStream::new(0.45, seed).unwrap();
        let d2 = d1 + frac * (0.24 - d1);
        let orbit = iterate_orbit(&map, &noise, 0.7, 400, &[d1, d2]).unwrap();
        for n in 0..=400 {
            prop_assert!(orbit.z[0][n] <= orbit.z[1][n]);
        }
    }

    #[test]
    fn wilson_interval_brackets_the_estimate(n in 1usize..100_000, frac in 0.0f64..=1.0) {
        let k = ((n as f64) * frac).floor() as usize;
        let (lo, hi) = wilson(k, n, Z95);
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p + 1e-12 && p <= hi + 1e-12 && hi <= 1.0);
    }
}

#[test]
fn raising_kappa_can_admit_new_times_through_the_distance_family() {
    // Raising κ₁ lowers the distance threshold κ₁^{−bm}.
    let map = sine5();
    let noise = NoiseStream::new(0.45, 0).unwrap();
    let delta = 0.01;
    let orbit = iterate_orbit(&map, &noise, 0.3, 300, &[delta]).unwrap();
    let b = default_b(1.0);
    let weak = hyperbolic_times(&orbit, &HyperbolicParams { kappa1: 0.01f64.exp(), delta, b }).unwrap().times;
    let strong = hyperbolic_times(&orbit, &HyperbolicParams { kappa1: 0.3638f64.exp(), delta, b }).unwrap().times;
    assert!(strong.iter().any(|t| weak.binary_search(t).is_err()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn branch_domains_tile_the_source(seed in 0u64..10_000, lo in 0.0f64..1.0, len in 0.01f64..0.3, n in 0usize..4) {
        let map = sine5();
        let noise = NoiseStream::new(0.45, seed).unwrap();
        let arc = Arc::new(lo, lo + len).unwrap();
        let sys = refine_branches(&map, &noise, arc, n, BranchConfig::default()).unwrap();
        let mut doms: Vec<(f64, f64)> = sys.branches.iter().map(|b| b.domain).collect();
        doms.sort_by(|a, b| a.0.total_cmp(&b.0));
        prop_assert!((doms[0].0 - arc.lo).abs() < 1e-12);
        prop_assert!((doms.last().unwrap().1 - arc.hi).abs() < 1e-12);
        for w in doms.windows(2) {
            prop_assert!((w[1].0 - w[0].1).abs() < 1e-12);
        }
        for b in &sys.branches {
            prop_assert_eq!(b.n, n);
            prop_assert!(b.image_length() >= 0.0);
        }
    }

    #[test]
    fn full_branch_time_is_monotone_under_inclusion(seed in 0u64..10_000, lo in 0.0f64..1.0, len in 0.02f64..0.2, grow in 0.0f64..0.2) {
        let map = sine5();
        let noise = NoiseStream::new(0.45, seed).unwrap();
        let cfg = FullBranchConfig::new(1.3, 60);
        let inner = Arc::new(lo, lo + len).unwrap();
        let outer = Arc::new(lo - grow / 2.0, lo + len + grow / 2.0).unwrap();
        let a = full_branch_time(&map, &noise, inner, &cfg);
        let b = full_branch_time(&map, &noise, outer, &cfg);
        if let Ok(hit) = a {
            prop_assert!(b.as_ref().map(|h| h.m <= hit.m).unwrap_or(false), "inner {} outer {:?}", hit.m, b.map(|h| h.m));
        }
    }

    #[test]
    fn expanding_measure_and_deficit_sum_to_one(l in 3.0f64..60.0, r in 2.01f64..12.0) {
        let map = CircleMap::sine(l).unwrap();
        let g = expanding_components(&map, r);
        let total: f64 = g.iter().map(|a| a.length()).sum();
        let cut = (r / (2.0 * std::f64::consts::PI * l)).min(1.0);
        let closed = if cut >= 1.0 { 0.0 } else { 1.0 - (2.0 / std::f64::consts::PI) * cut.asin() };
        prop_assert!((total - closed).abs() < 1e-9, "measure {} closed form {}", total, closed);
        prop_assert!((0.0..=1.0).contains(&total));
    }

    #[test]
    fn contracting_integral_is_nonnegative(l in 0.2f64..60.0) {
        let map = CircleMap::sine(l).unwrap();
        prop_assert!(contracting_log_integral(&map).unwrap() >= 0.0);
    }
}
