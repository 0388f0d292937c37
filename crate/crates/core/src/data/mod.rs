//! Synthetic instances, image I/O and evaluation metrics.

mod image;
mod metrics;
mod synth;

pub use image::{load_image, save_image, synthetic_test_image, Image};
pub use metrics::{
    psnr, relative_error, write_metrics_csv, EvalSet, MetricsReport, MetricsRow, METRICS_HEADER,
    PSNR_CAP_DB,
};
pub use synth::{synth_lowrank, SyntheticInstance, SyntheticSpec};
