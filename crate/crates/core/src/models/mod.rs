//! The four compared architectures behind one forward/backward interface:
//! ESA-LSTM, vanilla LSTM, cascaded LSTM and FCNN.

mod checkpoint;
mod config;
mod model;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::{Arch, ModelConfig, MODEL_KEYS};
pub use model::{build_model, Model};
