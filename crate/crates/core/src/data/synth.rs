use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::operators::{LinearMap, OperatorKind};
use crate::rng::{stream_rng, Stream};

/// Parameters of a random low-rank recovery instance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    /// Sample ratio in `(0, 1]`.
    pub sr: f64,
    /// Noise standard deviation.
    pub std: f64,
    pub seed: u64,
    pub kind: OperatorKind,
    /// Always keep the zero frequency (DCT only).
    pub keep_dc: bool,
}

impl SyntheticSpec {
    pub fn new(
        m: usize,
        n: usize,
        r: usize,
        sr: f64,
        std: f64,
        seed: u64,
        kind: OperatorKind,
    ) -> Self {
        SyntheticSpec {
            m,
            n,
            r,
            sr,
            std,
            seed,
            kind,
            keep_dc: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::arg("dimensions must be positive"));
        }
        if self.r == 0 || self.r > self.m.min(self.n) {
            return Err(Error::arg(format!(
                "rank {} outside 1..={}",
                self.r,
                self.m.min(self.n)
            )));
        }
        if !(self.sr > 0.0 && self.sr <= 1.0) {
            return Err(Error::arg(format!(
                "sample ratio {} outside (0, 1]",
                self.sr
            )));
        }
        if !(self.std >= 0.0 && self.std.is_finite()) {
            return Err(Error::arg(format!(
                "noise std {} must be nonnegative",
                self.std
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticInstance {
    /// Ground truth `X* = G₁G₂`.
    pub truth: DMatrix<f64>,
    pub op: LinearMap<f64>,
    /// `A(X*) + ω`.
    pub b: DVector<f64>,
}

fn randn<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_iterator(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.sample::<f64, _>(StandardNormal)),
    )
}

/// Draws `X* = G₁G₂` with standard normal `m × r` and `r × n` factors, the
/// operator, and `b = A(X*) + ω` with `ω ~ N(0, std²)`. Each component uses
/// its own stream of `spec.seed`.
pub fn synth_lowrank(spec: &SyntheticSpec) -> Result<SyntheticInstance> {
    spec.validate()?;
    let mut factors = stream_rng(spec.seed, Stream::Factors);
    let g1 = randn(&mut factors, spec.m, spec.r);
    let g2 = randn(&mut factors, spec.r, spec.n);
    let truth = g1 * g2;

    let op = match spec.kind {
        OperatorKind::SamplingMask => LinearMap::random_mask(spec.m, spec.n, spec.sr, spec.seed)?,
        OperatorKind::PartialDct2D => {
            LinearMap::random_dct(spec.m, spec.n, spec.sr, spec.seed, spec.keep_dc)?
        }
    };
    let mut b = op.apply(&truth)?;
    if spec.std > 0.0 {
        let mut noise = stream_rng(spec.seed, Stream::Noise);
        for v in b.iter_mut() {
            *v += spec.std * noise.sample::<f64, _>(StandardNormal);
        }
    }
    Ok(SyntheticInstance { truth, op, b })
}
