//! Selective self-attention LSTM (ESA-LSTM) for well-log curve synthesis.
//!
//! Layers are written by hand on top of a small dense `f64` kernel with
//! explicit backward passes; every gradient is checked against central
//! finite differences in the test suite.

pub mod data;
pub mod error;
pub mod models;
pub mod nn;
pub mod select;
pub mod seq;

pub use error::{Error, Result};
