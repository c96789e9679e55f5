//! Workloads, surrogate contribution models and memory-effect analyses.

pub mod contribution;
pub mod effects;
pub mod workload;

pub use contribution::{ContributionKind, ContributionModel};
pub use effects::{
    contiguity_profile, creation_time_density, least_squares_slope, lifetimes,
    ltm_bound_tracker, mean_weight_by_age_diff, cue_hit_rate, retrieval_autocorrelation,
    retrieved_ltm_age_curve, series_autocorrelation, AcfRow, AcfTable, BoundReport, BoundRow,
    ContiguityBin, CreationDensity, DensityBin, Lifetime,
};
pub use workload::{generate_workload, Stream, WorkloadKind, WorkloadSpec};
