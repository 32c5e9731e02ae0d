//! Dense numeric kernel: matrices, parameters, affine maps, activations,
//! loss, optimizer and a finite-difference gradient checker.

mod activation;
mod adam;
pub mod fastmath;
mod gradcheck;
mod linear;
mod loss;
mod matrix;
mod param;

pub use activation::{
    sigmoid, sigmoid_backward, sigmoid_scalar, softmax_rows, softmax_rows_backward, tanh_act,
    tanh_backward, Activation, ActivationKind,
};
pub(crate) use activation::softmax_in_place;
pub use adam::{AdamConfig, AdamState};
pub use gradcheck::grad_check;
pub use linear::Linear;
pub use loss::mse_loss;
pub use matrix::Matrix;
pub(crate) use matrix::dot;
pub use param::{fan_in_bound, layer_rng, HasParams, Parameter};
