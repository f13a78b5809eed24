//! Dimension sweeps that reproduce each fragility claim, analytic oracles to
//! check them against, and deterministic CSV/JSON output.
//!
//! Every sweep point and seed is an independent job with its own
//! [`SeedSpec`](crate::SeedSpec) stream; jobs run on the rayon pool and their
//! results are keyed and sorted before writing, so output bytes do not depend
//! on the worker count.

mod config;
mod experiments;
mod oracles;
mod result;

pub use config::{BoxGrid, ExperimentConfig, ExperimentKind, ManifoldTemplate, TrainSettings};
pub use experiments::{
    nearest_error_distance, run_experiment, run_experiment_with_workers, run_fragile_box,
    run_lid_contrast, run_margin_collapse, run_noise_ball_sweep, run_sphere_scaling,
    run_transfer_matrix,
};
pub use oracles::{
    fragile_box_analytic, lipschitz_sample_bound, FragileBoxClassifier, NormThresholdClassifier,
};
pub use result::{config_hash, read_rows, ExperimentResult, Provenance, ResultRow, CSV_HEADER};
