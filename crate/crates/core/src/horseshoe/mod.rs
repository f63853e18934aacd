//! Random horseshoes: monotone branches, full-branch times, return
//! sequences, cylinders, shadowing and density statistics.

mod branch;
mod density;
mod full;
mod returns;
mod shadow;

pub use branch::{
    refine_branches, BranchConfig, BranchSystem, BranchTracker, ChainStep, MonotoneBranch, DEFAULT_BRANCH_CAP,
    EPS_BRANCH, TAU_GEO,
};
pub use density::{
    density_from_records, density_report, measure_h4, sample_m, second_moment, survival_from_samples, survival_m,
    DensityReport, EnvelopeFit, H4Level, H4Report, MSurvival, SeedDensity, SeedFailure,
};
pub use full::{full_branch_time, FirstStepPolicy, FullBranchConfig, FullBranchHit, FLOOR_MARGIN};
pub use returns::{
    horseshoe_returns, verify_cylinder, Cylinder, CylinderCheck, HorseshoeConfig, HorseshoeRecord, KEEP_AFTER_COVER,
};
pub use shadow::{shadow, shadow_precision, ShadowResult, ShadowVisit};
