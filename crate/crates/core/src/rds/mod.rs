//! Random orbits `g^n_ω(x) = f_{ω_{n-1}} ∘ … ∘ f_{ω_0}(x)` with the running
//! sums `S_n` and `Z_n(δ)`, stationary histograms and tail probabilities.

mod histogram;
mod orbit;
mod tails;

pub use histogram::{stationary_histogram, total_variation, two_start_tv, HistogramMeasure, TwoStartReport};
pub use orbit::{finite_time_lyapunov, iterate_orbit, lyapunov_estimate, LyapunovEstimate, Orbit};
pub use tails::{tail_probability, SurvivalCurve, SurvivalPoint, TailConfig, TailEvent};
