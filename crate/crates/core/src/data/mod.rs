//! Well logs: CSV ingestion, a layered-earth synthetic generator,
//! normalization, sliding windows and the train/test well split.

mod csvio;
mod norm;
mod split;
mod synthetic;
mod welllog;
mod window;

pub use csvio::{load_csv, read_csv, save_csv, write_csv, LoadedLog, DEPTH_TOLERANCE};
pub use norm::{denormalize, fit_normalizer, normalize, NormStats, STD_FLOOR};
pub use split::{split_wells, well_label, WellSplit};
pub use synthetic::{generate_synthetic, SyntheticConfig};
pub use welllog::{channel_unit, default_inputs, Curve, WellLog, EXPERIMENT_CHANNELS, KNOWN_CHANNELS};
pub use window::{make_prediction_windows, make_windows, WindowDataset};
