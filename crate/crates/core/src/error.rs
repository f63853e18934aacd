//! Error type shared by every engine.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("map is not differentiable at {x}")]
    NonDifferentiable { x: f64 },

    #[error("the region {{|df| > {r}}} is empty")]
    DegenerateRegion { r: f64 },

    #[error("orbit hit the singular set at step {index}")]
    SingularHit { index: usize },

    #[error("log|df| is not integrable near {point}: {detail}")]
    NonIntegrable { point: f64, detail: String },

    #[error("reference interval does not cover the circle (image length {image_length})")]
    CoverFailed { image_length: f64 },

    #[error("interval is not inside the expanding set at the first step (min |df| = {min_abs_deriv})")]
    NotExpanding { min_abs_deriv: f64 },

    #[error("no full branch within {n_max} steps (longest image {max_image_length})")]
    Timeout { n_max: usize, max_image_length: f64 },

    #[error("branch count {count} exceeds cap {cap}")]
    BranchExplosion { count: usize, cap: usize },

    #[error("no cylinder from I{i} onto I{j} at return {k}")]
    CylinderNotFound { k: usize, i: usize, j: usize },

    #[error("hyperbolic ball not found: {0}")]
    NotFound(String),

    #[error("shadowing failed at return {k}: {detail}")]
    VerificationFailed { k: usize, detail: String },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::InvalidArgument(format!("json: {e}"))
    }
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}

impl Error {
    /// Variant name, used in machine-readable diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::NonDifferentiable { .. } => "NonDifferentiable",
            Error::DegenerateRegion { .. } => "DegenerateRegion",
            Error::SingularHit { .. } => "SingularHit",
            Error::NonIntegrable { .. } => "NonIntegrable",
            Error::CoverFailed { .. } => "CoverFailed",
            Error::NotExpanding { .. } => "NotExpanding",
            Error::Timeout { .. } => "Timeout",
            Error::BranchExplosion { .. } => "BranchExplosion",
            Error::CylinderNotFound { .. } => "CylinderNotFound",
            Error::NotFound(_) => "NotFound",
            Error::VerificationFailed { .. } => "VerificationFailed",
            Error::InvariantViolation(_) => "InvariantViolation",
            Error::Io(_) => "Io",
        }
    }
}
