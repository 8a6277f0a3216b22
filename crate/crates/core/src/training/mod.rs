//! Hinge loss with L1 on weights, minimized by mini-batch Adam.

mod adam;
mod config;
mod train;

pub use adam::{adam_step, AdamState};
pub use config::{parse_kv, read_kv_file, AdamParams, TrainConfig};
pub use train::{
    batch_gradient, hinge_loss, objective, train, Checkpoint, TrainReport, BATCH_LOG_EVERY,
    FULL_OBJECTIVE_EVERY,
};
