//! Command-line front end: subcommands, reproducible run configurations and
//! exit codes.
//!
//! Exit codes: `0` success, `2` invalid input or configuration, `3` a search
//! limit was hit (timeout, branch explosion, singular orbit), `4` an
//! invariant or verification failed.

mod output;
mod pipelines;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::circle::{CircleMap, MapSpec};
use crate::error::{Error, Result};

pub use output::{fmt_f64, Sidecar};
pub use pipelines::run_config;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "CIRCLE_RDS_OUT";

#[derive(Debug, Parser)]
#[command(name = "circle-rds", version, about = "Random circle maps with additive noise")]
pub struct Cli {
    /// Output directory (defaults to $CIRCLE_RDS_OUT, then the working directory).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Also write gnuplot-readable `.dat` files.
    #[arg(long, global = true)]
    pub emit_plots: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    #[command(flatten)]
    Run(RunConfig),
    /// Re-run a pipeline from its metadata sidecar.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub sidecar: PathBuf,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum RunConfig {
    /// Iterate one random orbit.
    Simulate(SimulateArgs),
    /// Monte Carlo Lyapunov exponent over seeds.
    Lyapunov(LyapunovArgs),
    /// Certify (σ, R)-predominant expansion.
    Certify(CertifyArgs),
    /// Return times, cylinders and shadowing for two arcs.
    Horseshoe(HorseshoeArgs),
    /// Shadow one symbol sequence.
    Shadow(ShadowArgs),
    /// Survival curves of large-deviation events.
    Tails(TailsArgs),
    /// Hyperbolic times and the frequency bound.
    Hyperbolic(HyperbolicArgs),
}

impl RunConfig {
    pub fn name(&self) -> &'static str {
        match self {
            RunConfig::Simulate(_) => "simulate",
            RunConfig::Lyapunov(_) => "lyapunov",
            RunConfig::Certify(_) => "certify",
            RunConfig::Horseshoe(_) => "horseshoe",
            RunConfig::Shadow(_) => "shadow",
            RunConfig::Tails(_) => "tails",
            RunConfig::Hyperbolic(_) => "hyperbolic",
        }
    }
}

/// Seeds given as `a..b`, a comma list, or one number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSet {
    Range { start: u64, end: u64 },
    List(Vec<u64>),
}

impl SeedSet {
    pub fn seeds(&self) -> Vec<u64> {
        match self {
            SeedSet::Range { start, end } => (*start..*end).collect(),
            SeedSet::List(v) => v.clone(),
        }
    }
}

fn parse_seeds(s: &str) -> std::result::Result<SeedSet, String> {
    let num = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("bad seed '{t}': {e}"));
    if let Some((a, b)) = s.split_once("..") {
        let (start, end) = (num(a)?, num(b)?);
        if end <= start {
            return Err("empty seed range".into());
        }
        return Ok(SeedSet::Range { start, end });
    }
    Ok(SeedSet::List(s.split(',').map(num).collect::<std::result::Result<_, _>>()?))
}

fn parse_map(s: &str) -> std::result::Result<MapSpec, String> {
    let text = if s.trim_start().starts_with('{') {
        s.to_string()
    } else {
        std::fs::read_to_string(s).map_err(|e| format!("cannot read map file {s}: {e}"))?
    };
    let spec: MapSpec = serde_json::from_str(&text).map_err(|e| format!("bad map JSON: {e}"))?;
    CircleMap::from_spec(&spec).map_err(|e| e.to_string())?;
    Ok(spec)
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected 'a,b', got '{s}'"))?;
    let f = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("bad number '{t}': {e}"));
    Ok((f(a)?, f(b)?))
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// Map JSON file or inline JSON.
    #[arg(long, value_parser = parse_map)]
    pub map: MapSpec,
    /// Noise amplitude (defaults to the map's `sigma`).
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.1)]
    pub x0: f64,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Truncation radii for `Z_n`.
    #[arg(long, value_delimiter = ',', default_value = "0.01")]
    pub delta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct LyapunovArgs {
    #[arg(long, value_parser = parse_map)]
    pub map: MapSpec,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, value_parser = parse_seeds, default_value = "0..100")]
    pub seeds: SeedSet,
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0.1)]
    pub x0: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CertifyArgs {
    #[arg(long, value_parser = parse_map)]
    pub map: MapSpec,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long = "R")]
    #[serde(rename = "R")]
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct HorseshoeArgs {
    #[arg(long, value_parser = parse_map)]
    pub map: MapSpec,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, value_parser = parse_seeds, default_value = "0..10")]
    pub seeds: SeedSet,
    #[arg(long = "I0", value_parser = parse_pair)]
    #[serde(rename = "I0")]
    pub i0: (f64, f64),
    #[arg(long = "I1", value_parser = parse_pair)]
    #[serde(rename = "I1")]
    pub i1: (f64, f64),
    /// Expansion rate (defaults to `e^{λ̂/8}`, capped by `--R` when given).
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long = "R")]
    #[serde(rename = "R")]
    pub r: Option<f64>,
    #[arg(long, default_value_t = 20)]
    pub returns: usize,
    #[arg(long, default_value_t = 200)]
    pub n_max: usize,
    /// Random symbol sequences shadowed per seed.
    #[arg(long, default_value_t = 10)]
    pub symbols: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ShadowArgs {
    #[arg(long, value_parser = parse_map)]
    pub map: MapSpec,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "I0", value_parser = parse_pair)]
    #[serde(rename = "I0")]
    pub i0: (f64, f64),
    #[arg(long = "I1", value_parser = parse_pair)]
    #[serde(rename = "I1")]
    pub i1: (f64, f64),
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long = "R")]
    #[serde(rename = "R")]
    pub r: Option<f64>,
    #[arg(long, default_value_t = 200)]
    pub n_max: usize,
    /// Symbol word such as `0110`.
    #[arg(long)]
    pub symbols: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    SBelow,
    ZAbove,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TailsArgs {
    #[arg(long, value_parser = parse_map)]
    pub map: MapSpec,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, value_enum)]
    pub event: EventKind,
    /// Rate for `s-below`.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Truncation radius for `z-above`.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Rate for `z-above` (defaults to `H(δ)`).
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long, value_delimiter = ',', default_value = "50,100,200,400")]
    pub n_list: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub x0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct HyperbolicArgs {
    #[arg(long, value_parser = parse_map)]
    pub map: MapSpec,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, value_parser = parse_seeds, default_value = "0..100")]
    pub seeds: SeedSet,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Rate `λ` of the frequency bound (defaults to half the mean `S_N/N`).
    #[arg(long)]
    pub lambda: Option<f64>,
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Timeout { .. } | Error::BranchExplosion { .. } | Error::SingularHit { .. } => 3,
        Error::CylinderNotFound { .. } | Error::VerificationFailed { .. } | Error::InvariantViolation(_) => 4,
        _ => 2,
    }
}

fn diagnostic(kind: &str, message: &str, code: i32) {
    let v = serde_json::json!({ "status": "error", "kind": kind, "message": message, "exit_code": code });
    eprintln!("{v}");
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("."))
}

fn execute(cli: Cli) -> Result<Vec<String>> {
    let out = out_dir(cli.out);
    let (config, plots) = match cli.command {
        Command::Run(cfg) => (cfg, cli.emit_plots),
        Command::Replay(r) => {
            let text = std::fs::read_to_string(&r.sidecar)?;
            let side: Sidecar = serde_json::from_str(&text)?;
            (side.config, side.emit_plots || cli.emit_plots)
        }
    };
    match cli.threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
            pool.install(|| run_config(&config, &out, plots))
        }
        None => run_config(&config, &out, plots),
    }
}

/// Runs the command line and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            diagnostic("InvalidArgument", e.to_string().trim(), 2);
            return 2;
        }
    };
    match execute(cli) {
        Ok(files) => {
            println!("{}", serde_json::json!({ "status": "ok", "outputs": files }));
            0
        }
        Err(e) => {
            let code = exit_code(&e);
            diagnostic(e.kind(), &e.to_string(), code);
            code
        }
    }
}
