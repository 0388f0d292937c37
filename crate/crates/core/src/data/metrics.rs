use std::io::{self, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operators::SamplingMask;
use crate::scalar::Real;

/// PSNR reported for an exact match.
pub const PSNR_CAP_DB: f64 = 99.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsReport {
    pub psnr_db: f64,
    pub reer: f64,
    /// Sum of squared errors over the evaluation set, all channels.
    pub se: f64,
    /// `SE / (channels · T)`.
    pub mse: f64,
    /// Pixels in the evaluation set per channel.
    pub t_count: usize,
    pub rank_recovered: usize,
}

/// Pixels that enter the PSNR.
#[derive(Clone, Copy, Debug)]
pub enum EvalSet<'a> {
    All,
    /// Every pixel outside the observed mask.
    Missing(&'a SamplingMask),
}

/// `‖X_re − X*‖_F / ‖X*‖_F`.
pub fn relative_error<T: Real>(x_re: &DMatrix<T>, x_star: &DMatrix<T>) -> Result<f64> {
    if x_re.shape() != x_star.shape() {
        return Err(Error::shape(
            format!("{}x{}", x_star.nrows(), x_star.ncols()),
            format!("{}x{}", x_re.nrows(), x_re.ncols()),
        ));
    }
    let denom = x_star.norm();
    if denom == T::zero() {
        return Err(Error::arg("reference matrix is zero"));
    }
    Ok(((x_re - x_star).norm() / denom).as_f64())
}

/// PSNR `10 log₁₀(255² / MSE)` of 8-bit channel data after clamping the
/// recovered channels to `[0, 255]`, with `MSE = SE / (channels · T)`. Also
/// fills `reer` over all pixels of the clamped recovery.
pub fn psnr(
    recovered: &[DMatrix<f64>],
    truth: &[DMatrix<f64>],
    eval: EvalSet<'_>,
) -> Result<MetricsReport> {
    if recovered.len() != truth.len() || !matches!(truth.len(), 1 | 3) {
        return Err(Error::arg(format!(
            "expected 1 or 3 matching channels, got {} and {}",
            recovered.len(),
            truth.len()
        )));
    }
    let shape = truth[0].shape();
    for c in recovered.iter().chain(truth) {
        if c.shape() != shape {
            return Err(Error::shape(
                format!("{}x{}", shape.0, shape.1),
                format!("{}x{}", c.nrows(), c.ncols()),
            ));
        }
    }
    let positions: Vec<(usize, usize)> = match eval {
        EvalSet::All => (0..shape.0)
            .flat_map(|i| (0..shape.1).map(move |j| (i, j)))
            .collect(),
        EvalSet::Missing(mask) => {
            if mask.shape() != shape {
                return Err(Error::shape(
                    format!("{}x{} mask", shape.0, shape.1),
                    format!("{:?}", mask.shape()),
                ));
            }
            mask.complement()
        }
    };
    if positions.is_empty() {
        return Err(Error::arg("evaluation set is empty"));
    }

    let clamped: Vec<DMatrix<f64>> = recovered
        .iter()
        .map(|c| c.map(|v| v.clamp(0.0, 255.0)))
        .collect();
    let mut se = 0.0;
    for (rec, tru) in clamped.iter().zip(truth) {
        for &(i, j) in &positions {
            let d = rec[(i, j)] - tru[(i, j)];
            se += d * d;
        }
    }
    let t_count = positions.len();
    let mse = se / (truth.len() * t_count) as f64;
    let psnr_db = if mse > 0.0 {
        (10.0 * (255.0 * 255.0 / mse).log10()).min(PSNR_CAP_DB)
    } else {
        PSNR_CAP_DB
    };

    let diff: f64 = clamped
        .iter()
        .zip(truth)
        .map(|(r, t)| (r - t).norm_squared())
        .sum();
    let norm: f64 = truth.iter().map(|t| t.norm_squared()).sum();
    if norm == 0.0 {
        return Err(Error::arg("reference image is zero"));
    }
    Ok(MetricsReport {
        psnr_db,
        reer: (diff / norm).sqrt(),
        se,
        mse,
        t_count,
        rank_recovered: 0,
    })
}

/// One metrics CSV row.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub experiment: String,
    pub seed: u64,
    pub method: String,
    pub report: MetricsReport,
}

pub const METRICS_HEADER: &str =
    "experiment,seed,method,psnr_db,reer,se,mse,t_count,rank_recovered";

/// Writes rows in the given order under [`METRICS_HEADER`].
pub fn write_metrics_csv<W: Write>(mut out: W, rows: &[MetricsRow]) -> io::Result<()> {
    writeln!(out, "{METRICS_HEADER}")?;
    for row in rows {
        let r = &row.report;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            row.experiment,
            row.seed,
            row.method,
            r.psnr_db,
            r.reer,
            r.se,
            r.mse,
            r.t_count,
            r.rank_recovered
        )?;
    }
    Ok(())
}
