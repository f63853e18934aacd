use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::output::{fmt_f64, Outputs, Table};
use super::*;
use crate::certifier::{certify, certify_sine_family};
use crate::circle::{derive_seed, noise::unit, Arc, Family, NoiseStream};
use crate::horseshoe::{
    horseshoe_returns, shadow, verify_cylinder, FullBranchConfig, HorseshoeConfig, HorseshoeRecord, ShadowResult,
};
use crate::pliss::{default_b, frequency_check, h_of_delta, hyperbolic_times, FrequencyBound, FrequencyReport};
use crate::rds::{iterate_orbit, lyapunov_estimate, tail_probability, TailConfig, TailEvent};

const START_TAG: u64 = 0x5eed;
const SYMBOL_TAG: u64 = 0x5a_0000;
const KAPPA_SEED: u64 = 0x006b_6170_7061;

fn resolve_sigma(flag: Option<f64>, map: &MapSpec) -> Result<f64> {
    flag.or(map.sigma).ok_or_else(|| Error::InvalidArgument("sigma missing: pass --sigma or set it in the map".into()))
}

fn random_start(seed: u64) -> f64 {
    unit(derive_seed(seed, START_TAG), 0)
}

/// `κ₁ = e^{λ̂/8}` from a fixed Monte Carlo run, capped by `R` when given.
fn default_kappa(map: &CircleMap, sigma: f64, r: Option<f64>) -> Result<f64> {
    let seeds: Vec<u64> = (0..32).map(|i| derive_seed(KAPPA_SEED, i)).collect();
    let est = lyapunov_estimate(map, sigma, &seeds, 0.1, 20_000)?;
    let k1 = (est.mean / 8.0).exp();
    let k = r.map_or(k1, |r| k1.min(r));
    if !(k > 1.0) {
        return Err(Error::InvalidArgument(format!("default kappa {k} is not above 1; pass --kappa")));
    }
    Ok(k)
}

/// Runs one configuration into `out`, writing its sidecar last.
pub fn run_config(config: &RunConfig, out: &Path, emit_plots: bool) -> Result<Vec<String>> {
    let mut outs = Outputs::new(out)?;
    let status = match config {
        RunConfig::Simulate(a) => simulate(a, &mut outs, emit_plots),
        RunConfig::Lyapunov(a) => lyapunov(a, &mut outs),
        RunConfig::Certify(a) => certify_cmd(a, &mut outs),
        RunConfig::Horseshoe(a) => horseshoe(a, &mut outs, emit_plots),
        RunConfig::Shadow(a) => shadow_cmd(a, &mut outs),
        RunConfig::Tails(a) => tails(a, &mut outs, emit_plots),
        RunConfig::Hyperbolic(a) => hyperbolic(a, &mut outs),
    }?;
    outs.sidecar(config, emit_plots)?;
    match status {
        Some(e) => Err(e),
        None => Ok(outs.files),
    }
}

type Status = Result<Option<Error>>;

fn simulate(a: &SimulateArgs, outs: &mut Outputs, plots: bool) -> Status {
    let map = CircleMap::from_spec(&a.map)?;
    let noise = NoiseStream::new(resolve_sigma(a.sigma, &a.map)?, a.seed)?;
    let orbit = iterate_orbit(&map, &noise, a.x0, a.n, &a.delta)?;
    let mut header = vec!["i".to_string(), "x".into(), "S".into()];
    header.extend(a.delta.iter().map(|d| format!("Z_{d}")));
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Table::csv(&h);
    let mut dat = Table::dat(&h);
    for i in 0..=orbit.len() {
        let mut row = vec![i.to_string(), fmt_f64(orbit.points[i]), fmt_f64(orbit.s[i])];
        row.extend(orbit.z.iter().map(|z| fmt_f64(z[i])));
        csv.row(&row);
        dat.row(&row);
    }
    outs.write("orbit.csv", &csv.finish())?;
    if plots {
        outs.write("orbit.dat", &dat.finish())?;
    }
    Ok(None)
}

fn lyapunov(a: &LyapunovArgs, outs: &mut Outputs) -> Status {
    let map = CircleMap::from_spec(&a.map)?;
    let est = lyapunov_estimate(&map, resolve_sigma(a.sigma, &a.map)?, &a.seeds.seeds(), a.x0, a.n)?;
    let mut csv = Table::csv(&["seed", "lambda"]);
    for (s, v) in &est.per_seed {
        csv.row(&[s.to_string(), v.map(fmt_f64).unwrap_or_default()]);
    }
    outs.write("lyapunov.csv", &csv.finish())?;
    outs.json("lyapunov.json", &est)?;
    Ok(None)
}

fn certify_cmd(a: &CertifyArgs, outs: &mut Outputs) -> Status {
    let map = CircleMap::from_spec(&a.map)?;
    let sigma = resolve_sigma(a.sigma, &a.map)?;
    let report = certify(&map, sigma, a.r)?;
    outs.json("report.json", &report)?;
    let plain_sine = a.map.family == Family::Sine && a.map.a.unwrap_or(0.0) == 0.0;
    if let (true, Some(l)) = (plain_sine, a.map.l) {
        if l >= 3.0 {
            outs.json("sine_certificate.json", &certify_sine_family(l, sigma)?)?;
        }
    }
    Ok(None)
}

#[derive(Serialize)]
struct ShadowSummary {
    symbols: String,
    passed: bool,
    x: Option<f64>,
    log10_width: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct SeedSummary {
    seed: u64,
    returns: Vec<usize>,
    cylinders_checked: usize,
    cylinders_passed: usize,
    worst_endpoint_error: f64,
    shadows: Vec<ShadowSummary>,
}

#[derive(Serialize)]
struct HorseshoeSummary {
    sigma: f64,
    kappa: f64,
    #[serde(rename = "I0")]
    i0: Arc,
    #[serde(rename = "I1")]
    i1: Arc,
    seeds: Vec<SeedSummary>,
    all_cylinders_passed: bool,
    all_shadows_passed: bool,
}

fn word(bits: &[u8]) -> String {
    bits.iter().map(|b| if *b == 0 { '0' } else { '1' }).collect()
}

fn horseshoe(a: &HorseshoeArgs, outs: &mut Outputs, plots: bool) -> Status {
    let map = CircleMap::from_spec(&a.map)?;
    let sigma = resolve_sigma(a.sigma, &a.map)?;
    let arcs = [Arc::new(a.i0.0, a.i0.1)?, Arc::new(a.i1.0, a.i1.1)?];
    let kappa = match a.kappa {
        Some(k) => k,
        None => default_kappa(&map, sigma, a.r)?,
    };
    let cfg = HorseshoeConfig { returns: a.returns, full_branch: FullBranchConfig::new(kappa, a.n_max) };
    let per_seed: Vec<(HorseshoeRecord, SeedSummary)> = a
        .seeds
        .seeds()
        .par_iter()
        .map(|&seed| {
            let noise = NoiseStream::new(sigma, seed)?;
            let rec = horseshoe_returns(&map, &noise, arcs, &cfg)?;
            let mut checked = 0;
            let mut passed = 0;
            let mut worst: f64 = 0.0;
            for c in rec.cylinders.iter().flatten() {
                let chk = verify_cylinder(&map, &rec, c, 33)?;
                checked += 1;
                passed += chk.passed as usize;
                worst = worst.max(chk.endpoint_error);
            }
            let shadows = (0..a.symbols)
                .map(|s| {
                    let tag = derive_seed(seed, SYMBOL_TAG + s as u64);
                    let bits: Vec<u8> = (0..=a.returns).map(|k| (unit(tag, k as u64) < 0.5) as u8).collect();
                    match shadow(&map, &rec, &bits) {
                        Ok(r) => Ok(ShadowSummary {
                            symbols: word(&bits),
                            passed: true,
                            x: Some(r.x),
                            log10_width: Some(r.log10_width),
                            error: None,
                        }),
                        Err(e @ Error::VerificationFailed { .. }) => Ok(ShadowSummary {
                            symbols: word(&bits),
                            passed: false,
                            x: None,
                            log10_width: None,
                            error: Some(e.to_string()),
                        }),
                        Err(e) => Err(e),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let summary = SeedSummary {
                seed,
                returns: rec.returns.clone(),
                cylinders_checked: checked,
                cylinders_passed: passed,
                worst_endpoint_error: worst,
                shadows,
            };
            Ok((rec, summary))
        })
        .collect::<Result<_>>()?;
    let mut ret = Table::csv(&["seed", "k", "n_k"]);
    let mut dat = Table::dat(&["k", "n_k"]);
    let mut cyl = Table::csv(&["seed", "k", "i", "j", "lo", "hi", "min_log_deriv"]);
    for (rec, _) in &per_seed {
        for (k, n) in rec.returns.iter().enumerate() {
            ret.row(&[rec.seed.to_string(), k.to_string(), n.to_string()]);
            dat.row(&[k.to_string(), n.to_string()]);
        }
        dat.blank();
        for c in rec.cylinders.iter().flatten() {
            cyl.row(&[
                rec.seed.to_string(),
                c.k.to_string(),
                c.i.to_string(),
                c.j.to_string(),
                fmt_f64(c.domain.0),
                fmt_f64(c.domain.1),
                fmt_f64(c.min_log_deriv),
            ]);
        }
    }
    let seeds: Vec<SeedSummary> = per_seed.into_iter().map(|(_, s)| s).collect();
    let all_cylinders_passed = seeds.iter().all(|s| s.cylinders_passed == s.cylinders_checked);
    let all_shadows_passed = seeds.iter().all(|s| s.shadows.iter().all(|x| x.passed));
    outs.write("returns.csv", &ret.finish())?;
    outs.write("cylinders.csv", &cyl.finish())?;
    if plots {
        outs.write("returns.dat", &dat.finish())?;
    }
    outs.json(
        "shadow.json",
        &HorseshoeSummary { sigma, kappa, i0: arcs[0], i1: arcs[1], seeds, all_cylinders_passed, all_shadows_passed },
    )?;
    Ok(match (all_cylinders_passed, all_shadows_passed) {
        (true, true) => None,
        (false, _) => Some(Error::InvariantViolation("a cylinder failed forward re-verification".into())),
        (true, false) => Some(Error::InvariantViolation("a symbol sequence failed to shadow".into())),
    })
}

#[derive(Serialize)]
struct ShadowOutput {
    seed: u64,
    kappa: f64,
    returns: Vec<usize>,
    result: ShadowResult,
}

fn shadow_cmd(a: &ShadowArgs, outs: &mut Outputs) -> Status {
    let map = CircleMap::from_spec(&a.map)?;
    let sigma = resolve_sigma(a.sigma, &a.map)?;
    let bits: Vec<u8> = a
        .symbols
        .chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(Error::InvalidArgument(format!("symbol '{other}' is not 0 or 1"))),
        })
        .collect::<Result<_>>()?;
    if bits.is_empty() {
        return Err(Error::InvalidArgument("empty symbol word".into()));
    }
    let arcs = [Arc::new(a.i0.0, a.i0.1)?, Arc::new(a.i1.0, a.i1.1)?];
    let kappa = match a.kappa {
        Some(k) => k,
        None => default_kappa(&map, sigma, a.r)?,
    };
    let cfg = HorseshoeConfig { returns: (bits.len() - 1).max(1), full_branch: FullBranchConfig::new(kappa, a.n_max) };
    let noise = NoiseStream::new(sigma, a.seed)?;
    let rec = horseshoe_returns(&map, &noise, arcs, &cfg)?;
    let result = shadow(&map, &rec, &bits)?;
    outs.json("shadow.json", &ShadowOutput { seed: a.seed, kappa, returns: rec.returns, result })?;
    Ok(None)
}

fn tails(a: &TailsArgs, outs: &mut Outputs, plots: bool) -> Status {
    let map = CircleMap::from_spec(&a.map)?;
    let sigma = resolve_sigma(a.sigma, &a.map)?;
    let event = match a.event {
        EventKind::SBelow => TailEvent::SBelow {
            lambda: a.lambda.ok_or_else(|| Error::InvalidArgument("s-below needs --lambda".into()))?,
        },
        EventKind::ZAbove => {
            let delta = a.delta.ok_or_else(|| Error::InvalidArgument("z-above needs --delta".into()))?;
            TailEvent::ZAbove { delta, h: a.h.unwrap_or_else(|| h_of_delta(delta)) }
        }
    };
    let cfg = TailConfig { event, n_list: a.n_list.clone(), trials: a.trials, base_seed: a.seed, x0: a.x0 };
    let curve = tail_probability(&map, sigma, &cfg)?;
    let header = ["n", "count", "trials", "p_hat", "ci_lo", "ci_hi"];
    let mut csv = Table::csv(&header);
    let mut dat = Table::dat(&header);
    for p in &curve.points {
        let row = [
            p.n.to_string(),
            p.count.to_string(),
            p.trials.to_string(),
            fmt_f64(p.p_hat),
            fmt_f64(p.ci_lo),
            fmt_f64(p.ci_hi),
        ];
        csv.row(&row);
        dat.row(&row);
    }
    outs.write("survival.csv", &csv.finish())?;
    if plots {
        outs.write("survival.dat", &dat.finish())?;
    }
    outs.json("tails.json", &curve)?;
    Ok(None)
}

#[derive(Serialize)]
struct SeedFrequency {
    seed: u64,
    x0: f64,
    report: FrequencyReport,
}

#[derive(Serialize)]
struct FrequencyOutput {
    lambda_hat: f64,
    bound: FrequencyBound,
    hypotheses_met: usize,
    violations: usize,
    seeds: Vec<SeedFrequency>,
}

fn hyperbolic(a: &HyperbolicArgs, outs: &mut Outputs) -> Status {
    let map = CircleMap::from_spec(&a.map)?;
    let sigma = resolve_sigma(a.sigma, &a.map)?;
    let seeds = a.seeds.seeds();
    let plain: Vec<Option<f64>> = seeds
        .par_iter()
        .map(|&seed| {
            let noise = NoiseStream::new(sigma, seed)?;
            let o = iterate_orbit(&map, &noise, random_start(seed), a.n, &[])?;
            Ok((!o.is_poisoned()).then(|| o.s[a.n] / a.n as f64))
        })
        .collect::<Result<_>>()?;
    let finite: Vec<f64> = plain.iter().flatten().copied().collect();
    let lambda_hat = crate::stats::mean(&finite);
    let lambda = a.lambda.unwrap_or(0.5 * lambda_hat);
    let bound = FrequencyBound::new(lambda, map.sup_log_deriv(), default_b(map.regularity().beta))?;
    let rows: Vec<(SeedFrequency, Vec<String>)> = seeds
        .par_iter()
        .map(|&seed| {
            let noise = NoiseStream::new(sigma, seed)?;
            let x0 = random_start(seed);
            let o = iterate_orbit(&map, &noise, x0, a.n, &[bound.delta])?;
            let times = hyperbolic_times(&o, &bound.params())?.times;
            let report = frequency_check(&o, &bound, a.n)?;
            let mut lines = Vec::with_capacity(a.n);
            let mut t = times.iter().peekable();
            for n in 1..=a.n {
                let hit = t.peek() == Some(&&n);
                if hit {
                    t.next();
                }
                lines.push(format!("{seed},{n},{},{},{}", hit as u8, fmt_f64(o.s[n]), fmt_f64(o.z[0][n])));
            }
            Ok((SeedFrequency { seed, x0, report }, lines))
        })
        .collect::<Result<_>>()?;
    let mut csv = String::from("seed,n,is_hyperbolic,S_n,Z_n\n");
    for (_, lines) in &rows {
        for l in lines {
            csv.push_str(l);
            csv.push('\n');
        }
    }
    outs.write("hyperbolic.csv", &csv)?;
    let seeds: Vec<SeedFrequency> = rows.into_iter().map(|(s, _)| s).collect();
    let violations = seeds.iter().filter(|s| s.report.violation).count();
    let hypotheses_met = seeds.iter().filter(|s| s.report.hypotheses_met).count();
    outs.json("frequency.json", &FrequencyOutput { lambda_hat, bound, hypotheses_met, violations, seeds })?;
    Ok((violations > 0).then(|| Error::InvariantViolation(format!("{violations} frequency-bound violations"))))
}
