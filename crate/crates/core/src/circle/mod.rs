//! Circle dynamics: geometry of `S¹ = ℝ/ℤ`, the map families, counter-based
//! noise and the regularity checks.

mod geometry;
pub mod hp;
mod map;
pub mod noise;
mod regularity;
pub mod roots;
mod spline;

pub use geometry::{circle_dist, wrap, Arc, CirclePoint};
pub use map::{CircleMap, Family, MapSpec, Regularity, TruncatedDistance, CRITICAL_HIT_TOL, DIST_FLOOR};
pub use noise::{derive_seed, NoiseStream};
pub use regularity::{regularity_check, RegularityReport};
