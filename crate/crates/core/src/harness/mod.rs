//! Experiment harness: data sources, the streaming protocol, metrics, splits
//! and the static baseline.

pub mod baseline;
pub mod data;
pub mod metrics;
pub mod protocol;
pub mod splits;
pub mod synthetic;

pub use baseline::{baseline_cosine, CosineGallery};
pub use data::{load_features, read_features, save_features, write_features, DataSource};
pub use metrics::{average_records, compute_metrics, write_metrics, MetricsRecord, Scores, StepType};
pub use protocol::{
    run_baseline, run_baseline_universe, run_experiment, run_universe, split_universes, step_schedule,
    ExperimentConfig, ExperimentResult, UniverseRun,
};
pub use splits::{make_splits, openness};
pub use synthetic::{generate_universe, SyntheticUniverseSpec};
