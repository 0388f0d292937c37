//! Experiment runner for the `lowrank` recovery library: image completion,
//! synthetic sweeps, rank-estimation traces and method comparisons.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod output;
pub mod plot;
pub mod pool;
pub mod run;

pub use config::{Command, ExperimentConfig};
pub use plot::emit_plot_data;
