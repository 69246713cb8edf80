//! Trainable layers with hand-written adjoints, Adam, parameter checkpoints
//! and a finite-difference gradient checker.

pub mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod layers;
pub mod param;

pub use adam::{adam_step, Adam, AdamSettings};
pub use checkpoint::{encode_checkpoint, read_checkpoint, write_checkpoint};
pub use gradcheck::{grad_check, numeric_gradient, GradCheckOptions, GradCheckReport};
pub use layers::{
    conv2d_forward, dense_forward, sigmoid, softmax4, Activation, Conv2d, Dense, Layer, LayerSpec,
    Recorded, Sequential,
};
pub use param::{Grads, ParamId, ParamSet, ParamTensor};
