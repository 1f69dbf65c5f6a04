//! Quadratic continuous-state branching processes conditioned on their
//! late-time population size.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analytics;
pub mod batch;
pub mod cli;
pub mod conditioning;
pub mod config;
pub mod decorate;
pub mod error;
pub mod metric;
pub mod quad;
pub mod report;
pub mod rng;
pub mod samplers;
pub mod skeleton;
pub mod special;
pub mod stats;
pub mod tree_core;
pub mod verify;

pub use analytics::ModelParams;
pub use error::{Error, Result};
pub use rng::RandomStream;
