//! The predictor, its loss, evaluation and truncation-free BPTT training.

pub mod config;
pub mod network;
pub mod rollout;
pub mod train;

pub use config::{FdtnConfig, TransformVariant};
pub use network::Fdtn;
pub use rollout::{RolloutState, Tape};
pub use train::{
    copy_last_baseline, evaluate, mse, mse_grad, train_bptt, EpochLog, Evaluation, TrainReport,
    TrainSettings,
};
