//! Multiple-instance learning with pooling inside the network.
//!
//! A bag of instances is mapped instance-by-instance into `R^m`, pooled
//! (mean, max or smooth-max) into one vector, and classified by the layers
//! after the pool. Everything is trained end-to-end with hinge loss, L1 and
//! Adam, and evaluated by equal error rate under repeated stratified k-fold
//! cross-validation with an inner grid search.

pub mod cli;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod gradcheck;
pub mod network;
pub mod seed;
pub mod training;

pub use error::{Error, Result};
