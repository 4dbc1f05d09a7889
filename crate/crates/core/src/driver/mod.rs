//! End-to-end active learning loop, evaluation metrics, run files and plots.

mod config;
mod experiment;
mod metrics;
mod plot;

pub use config::{ClusteringConfig, DatasetConfig, ExperimentConfig, Method};
pub use experiment::{read_runs, run_experiment, write_runs, RunRecord};
pub use metrics::{accuracy, pooled_average_precision};
pub use plot::{emit_plots, render_svg};
