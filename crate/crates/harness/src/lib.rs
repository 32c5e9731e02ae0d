//! Experiment harness for ESA-LSTM curve synthesis: run configuration,
//! training with early stopping, prediction, baseline comparison,
//! ablations, timing and synthetic data export.

mod commands;
mod config;
mod error;
mod metrics;
mod pipeline;
pub mod table;
mod train;

pub use commands::{
    bench_models, cmd_ablate, cmd_bench, cmd_compare, cmd_gen_data, cmd_predict, cmd_train,
    compare_models, predict_log, AblationAxis, AblationResult, BenchRow, CompareResult, Prediction,
};
pub use config::{RunConfig, RUN_KEYS};
pub use error::{HarnessError, Result};
pub use metrics::{rmse, EpochRecord, MetricsReport, WellScore};
pub use pipeline::{load_well_dir, load_wells, prepare, Prepared};
pub use train::{checkpoint_meta, evaluate_test, physical_rmse, predict_dataset, train_model, TrainOutcome};
