//! Statistics of return times: positive density, survival of `m(ω, I)` and
//! the constants of the full-branch hypothesis.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::full::{full_branch_time, FullBranchConfig};
use super::returns::{horseshoe_returns, HorseshoeConfig, HorseshoeRecord};
use crate::circle::{Arc, CircleMap, NoiseStream};
use crate::error::{invalid, Error, Result};
use crate::rds::SurvivalPoint;
use crate::stats::{ks_two_sample, lag1_autocorrelation, mean, weighted_line_fit, wilson, KsResult, Z95};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedDensity {
    pub seed: u64,
    pub returns: Vec<usize>,
    /// `n_K / K`.
    pub rate: f64,
    /// `|n_K / K − Ê[n₀]| / Ê[n₀]`.
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedFailure {
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub returns: usize,
    /// Cross-seed mean of the first return time.
    pub mean_n0: f64,
    pub lag1_autocorrelation: f64,
    /// Pooled increments of the first half of the returns against the
    /// second half.
    pub halves_ks: KsResult,
    pub seeds: Vec<SeedDensity>,
    pub failures: Vec<SeedFailure>,
}

impl DensityReport {
    pub fn fraction_within(&self, tol: f64) -> f64 {
        let n = self.seeds.len() + self.failures.len();
        if n == 0 {
            return 0.0;
        }
        self.seeds.iter().filter(|s| s.relative_error < tol).count() as f64 / n as f64
    }
}

/// Summarises precomputed records.
pub fn density_from_records(records: &[std::result::Result<HorseshoeRecord, SeedFailure>]) -> Result<DensityReport> {
    let ok: Vec<&HorseshoeRecord> = records.iter().filter_map(|r| r.as_ref().ok()).collect();
    let failures: Vec<SeedFailure> = records.iter().filter_map(|r| r.as_ref().err().cloned()).collect();
    let Some(first) = ok.first() else {
        return invalid("no successful horseshoe record");
    };
    let k = first.returns.len() - 1;
    if k == 0 || ok.iter().any(|r| r.returns.len() != k + 1) {
        return invalid("records must share a positive number of returns");
    }
    let incs: Vec<Vec<f64>> = ok.iter().map(|r| r.increments().into_iter().map(|d| d as f64).collect()).collect();
    let n0: Vec<f64> = incs.iter().map(|v| v[0]).collect();
    let mean_n0 = mean(&n0);
    let seeds = ok
        .iter()
        .map(|r| {
            let rate = r.returns[k] as f64 / k as f64;
            SeedDensity {
                seed: r.seed,
                returns: r.returns.clone(),
                rate,
                relative_error: (rate - mean_n0).abs() / mean_n0,
            }
        })
        .collect();
    let half = k / 2;
    let a: Vec<f64> = incs.iter().flat_map(|v| v[..half].iter().copied()).collect();
    let b: Vec<f64> = incs.iter().flat_map(|v| v[half..].iter().copied()).collect();
    let halves_ks = if a.is_empty() { KsResult { statistic: 0.0, p_value: 1.0 } } else { ks_two_sample(&a, &b) };
    Ok(DensityReport {
        returns: k,
        mean_n0,
        lag1_autocorrelation: lag1_autocorrelation(&incs),
        halves_ks,
        seeds,
        failures,
    })
}

/// Runs the horseshoe construction over many seeds and summarises the return
/// times.
pub fn density_report(
    map: &CircleMap,
    sigma: f64,
    seeds: &[u64],
    arcs: [Arc; 2],
    cfg: &HorseshoeConfig,
) -> Result<DensityReport> {
    if seeds.len() < 100 {
        return invalid("density_report needs at least 100 seeds");
    }
    let records: Vec<_> = seeds
        .par_iter()
        .map(|&seed| -> Result<std::result::Result<HorseshoeRecord, SeedFailure>> {
            let noise = NoiseStream::new(sigma, seed)?;
            Ok(horseshoe_returns(map, &noise, arcs, cfg).map_err(|e| SeedFailure { seed, error: e.to_string() }))
        })
        .collect::<Result<_>>()?;
    density_from_records(&records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub sse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MSurvival {
    /// `m(ω, I)` per seed, `None` on timeout.
    pub samples: Vec<Option<usize>>,
    pub timeouts: usize,
    /// `P(m > l)` for `l = 0..=l_max`.
    pub points: Vec<SurvivalPoint>,
    pub mean: f64,
    pub second_moment: f64,
    /// `log p̂` against `log l`: decay exponent is `−slope`.
    pub power: Option<EnvelopeFit>,
    /// `log p̂` against `l`.
    pub geometric: Option<EnvelopeFit>,
    pub geometric_dominates: bool,
    /// Power exponent at least 3, or the geometric envelope fits better.
    pub consistent: bool,
}

/// Samples `m(ω, I)` per seed.
pub fn sample_m(
    map: &CircleMap,
    sigma: f64,
    seeds: &[u64],
    arc: Arc,
    cfg: &FullBranchConfig,
) -> Result<Vec<Option<usize>>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let noise = NoiseStream::new(sigma, seed)?;
            match full_branch_time(map, &noise, arc, cfg) {
                Ok(hit) => Ok(Some(hit.m)),
                Err(Error::Timeout { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Empirical second moment `E[m²]` over finished samples.
pub fn second_moment(samples: &[Option<usize>]) -> f64 {
    let v: Vec<f64> = samples.iter().flatten().map(|&m| (m * m) as f64).collect();
    mean(&v)
}

fn fit(x: &[f64], y: &[f64], w: &[f64]) -> Option<EnvelopeFit> {
    weighted_line_fit(x, y, w, true).map(|f| EnvelopeFit { slope: f.slope, intercept: f.intercept, sse: f.sse })
}

/// Survival curve of a sample of full-branch times with both envelope fits.
pub fn survival_from_samples(samples: Vec<Option<usize>>, l_max: usize) -> MSurvival {
    let trials = samples.len();
    let points: Vec<SurvivalPoint> = (0..=l_max)
        .map(|l| {
            let count = samples.iter().filter(|m| m.is_none_or(|m| m > l)).count();
            let (ci_lo, ci_hi) = wilson(count, trials, Z95);
            SurvivalPoint { n: l, count, trials, p_hat: count as f64 / trials as f64, ci_lo, ci_hi }
        })
        .collect();
    let pos: Vec<&SurvivalPoint> = points.iter().filter(|p| p.n >= 1 && p.count > 0 && p.count < p.trials).collect();
    let y: Vec<f64> = pos.iter().map(|p| p.p_hat.ln()).collect();
    let w: Vec<f64> = pos.iter().map(|p| p.trials as f64 * p.p_hat / (1.0 - p.p_hat)).collect();
    let xl: Vec<f64> = pos.iter().map(|p| (p.n as f64).ln()).collect();
    let xn: Vec<f64> = pos.iter().map(|p| p.n as f64).collect();
    let power = fit(&xl, &y, &w);
    let geometric = fit(&xn, &y, &w);
    let geometric_dominates = match (&power, &geometric) {
        (Some(p), Some(g)) => g.sse <= p.sse,
        _ => false,
    };
    let consistent = match &power {
        Some(p) => -p.slope >= 3.0 || geometric_dominates,
        None => true,
    };
    let finished: Vec<f64> = samples.iter().flatten().map(|&m| m as f64).collect();
    MSurvival {
        timeouts: samples.iter().filter(|m| m.is_none()).count(),
        mean: mean(&finished),
        second_moment: second_moment(&samples),
        samples,
        points,
        power,
        geometric,
        geometric_dominates,
        consistent,
    }
}

/// Empirical law of `m(ω, I)` over the given seeds.
pub fn survival_m(
    map: &CircleMap,
    sigma: f64,
    seeds: &[u64],
    arc: Arc,
    cfg: &FullBranchConfig,
    l_max: usize,
) -> Result<MSurvival> {
    if seeds.len() < 1000 {
        return invalid("survival_m needs at least 1000 seeds");
    }
    Ok(survival_from_samples(sample_m(map, sigma, seeds, arc, cfg)?, l_max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H4Level {
    pub k: usize,
    /// Smallest Wilson lower bound of `P(m ≤ K)` over the arc grid.
    pub iota: f64,
    pub worst_arc: Arc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H4Report {
    pub eta: f64,
    pub kappa: f64,
    pub arcs: usize,
    pub seeds: usize,
    pub levels: Vec<H4Level>,
    /// Level maximising `−log(1 − ι)/(K + 1)`.
    pub chosen: Option<H4Level>,
}

/// Measures `K` and `ι` of the full-branch hypothesis at scale `η` on a grid
/// of arcs with lengths in `[η/4, 4η]`.
pub fn measure_h4(
    map: &CircleMap,
    sigma: f64,
    seeds: &[u64],
    eta: f64,
    cfg: &FullBranchConfig,
    lengths: usize,
    positions: usize,
) -> Result<H4Report> {
    if !(eta > 0.0 && 4.0 * eta < 1.0) {
        return invalid("eta must lie in (0, 1/4)");
    }
    if lengths == 0 || positions == 0 || seeds.is_empty() {
        return invalid("grid sizes and seed count must be positive");
    }
    let mut arcs = Vec::with_capacity(lengths * positions);
    for a in 0..lengths {
        let t = if lengths == 1 { 0.0 } else { a as f64 / (lengths - 1) as f64 };
        let len = eta / 4.0 * 16f64.powf(t);
        for p in 0..positions {
            let lo = p as f64 / positions as f64;
            arcs.push(Arc::new(lo, lo + len)?);
        }
    }
    let samples: Vec<Vec<Option<usize>>> =
        arcs.iter().map(|&arc| sample_m(map, sigma, seeds, arc, cfg)).collect::<Result<_>>()?;
    let levels: Vec<H4Level> = (1..=cfg.n_max)
        .map(|k| {
            let mut worst = (f64::INFINITY, arcs[0]);
            for (arc, s) in arcs.iter().zip(&samples) {
                let hits = s.iter().filter(|m| m.is_some_and(|m| m <= k)).count();
                let lo = wilson(hits, s.len(), Z95).0;
                if lo < worst.0 {
                    worst = (lo, *arc);
                }
            }
            H4Level { k, iota: worst.0, worst_arc: worst.1 }
        })
        .collect();
    let rate = |l: &H4Level| if l.iota >= 1.0 { f64::INFINITY } else { -(1.0 - l.iota).ln() / (l.k + 1) as f64 };
    let chosen = levels.iter().filter(|l| l.iota > 0.0).max_by(|a, b| rate(a).total_cmp(&rate(b))).cloned();
    Ok(H4Report { eta, kappa: cfg.kappa, arcs: arcs.len(), seeds: seeds.len(), levels, chosen })
}
