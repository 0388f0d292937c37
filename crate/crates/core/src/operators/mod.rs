//! Linear measurement maps `A : R^{m×n} → R^p` with `A A* = I`.

mod dct;
mod io;
mod mask;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub use dct::{dct2_matrix, PartialDct2D};
pub use io::{read_keep_file, read_mask_file, write_keep_file, write_mask_file};
pub use mask::SamplingMask;

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};
use crate::scalar::Real;

/// Measurement vector `b ∈ R^p`.
pub type MeasurementVector<T> = DVector<T>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    SamplingMask,
    PartialDct2D,
}

impl std::fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OperatorKind::SamplingMask => "mask",
            OperatorKind::PartialDct2D => "dct",
        })
    }
}

impl std::str::FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mask" => Ok(OperatorKind::SamplingMask),
            "dct" => Ok(OperatorKind::PartialDct2D),
            other => Err(Error::arg(format!(
                "unknown operator kind '{other}' (mask|dct)"
            ))),
        }
    }
}

/// A tight-frame linear map. Both variants satisfy `A(A*(y)) = y`.
#[derive(Clone, Debug)]
pub enum LinearMap<T: Real> {
    SamplingMask(SamplingMask),
    PartialDct2D(PartialDct2D<T>),
}

/// Number of measurements for a sample ratio: `round(sr · m · n)`.
pub fn measurement_count(rows: usize, cols: usize, ratio: f64) -> Result<usize> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::arg(format!("sample ratio {ratio} outside (0, 1]")));
    }
    let p = (ratio * (rows * cols) as f64).round() as usize;
    Ok(p.clamp(1, rows * cols))
}

impl<T: Real> LinearMap<T> {
    /// Uniformly random sampling mask drawn from the `Mask` stream of `seed`.
    pub fn random_mask(rows: usize, cols: usize, ratio: f64, seed: u64) -> Result<Self> {
        let mut rng = stream_rng(seed, Stream::Mask);
        let p = measurement_count(rows, cols, ratio)?;
        let flat = sample_flat(&mut rng, rows * cols, p, false);
        Ok(LinearMap::SamplingMask(SamplingMask::from_flat(
            rows, cols, &flat,
        )?))
    }

    /// Uniformly random frequency subset drawn from the `Frequencies` stream of
    /// `seed`. With `keep_dc` the zero frequency is always retained.
    pub fn random_dct(
        rows: usize,
        cols: usize,
        ratio: f64,
        seed: u64,
        keep_dc: bool,
    ) -> Result<Self> {
        let mut rng = stream_rng(seed, Stream::Frequencies);
        let p = measurement_count(rows, cols, ratio)?;
        let kept = sample_flat(&mut rng, rows * cols, p, keep_dc);
        Ok(LinearMap::PartialDct2D(PartialDct2D::new(
            rows, cols, kept,
        )?))
    }

    pub fn kind(&self) -> OperatorKind {
        match self {
            LinearMap::SamplingMask(_) => OperatorKind::SamplingMask,
            LinearMap::PartialDct2D(_) => OperatorKind::PartialDct2D,
        }
    }

    /// Domain dimensions `(m, n)`.
    pub fn shape(&self) -> (usize, usize) {
        match self {
            LinearMap::SamplingMask(mask) => mask.shape(),
            LinearMap::PartialDct2D(dct) => dct.shape(),
        }
    }

    /// Measurement count `p`.
    pub fn len(&self) -> usize {
        match self {
            LinearMap::SamplingMask(mask) => mask.len(),
            LinearMap::PartialDct2D(dct) => dct.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check_domain(&self, x: &DMatrix<T>) -> Result<()> {
        let (m, n) = self.shape();
        if x.shape() != (m, n) {
            return Err(Error::shape(
                format!("{m}x{n}"),
                format!("{}x{}", x.nrows(), x.ncols()),
            ));
        }
        Ok(())
    }

    fn check_measurements(&self, y: &DVector<T>) -> Result<()> {
        if y.len() != self.len() {
            return Err(Error::shape(
                format!("{} measurements", self.len()),
                format!("{}", y.len()),
            ));
        }
        Ok(())
    }

    pub fn apply(&self, x: &DMatrix<T>) -> Result<DVector<T>> {
        self.check_domain(x)?;
        Ok(self.apply_unchecked(x))
    }

    pub fn adjoint(&self, y: &DVector<T>) -> Result<DMatrix<T>> {
        self.check_measurements(y)?;
        Ok(self.adjoint_unchecked(y))
    }

    pub(crate) fn apply_unchecked(&self, x: &DMatrix<T>) -> DVector<T> {
        match self {
            LinearMap::SamplingMask(mask) => mask.gather(x),
            LinearMap::PartialDct2D(dct) => dct.gather_grid(&dct.forward(x)),
        }
    }

    pub(crate) fn adjoint_unchecked(&self, y: &DVector<T>) -> DMatrix<T> {
        match self {
            LinearMap::SamplingMask(mask) => mask.scatter(y),
            LinearMap::PartialDct2D(dct) => dct.inverse(&dct.scatter_grid(y)),
        }
    }

    /// `A*A(X)`.
    pub(crate) fn normal(&self, x: &DMatrix<T>) -> DMatrix<T> {
        match self {
            LinearMap::SamplingMask(mask) => {
                let mut out = DMatrix::zeros(x.nrows(), x.ncols());
                for &(i, j) in mask.indices() {
                    out[(i, j)] = x[(i, j)];
                }
                out
            }
            LinearMap::PartialDct2D(_) => self.adjoint_unchecked(&self.apply_unchecked(x)),
        }
    }

    /// Places a measurement vector into its `m × n` matrix form: sampled
    /// positions for a mask, kept coefficient positions for the DCT. This
    /// embedding is an isometry and [`from_grid`](Self::from_grid) inverts it.
    pub fn to_grid(&self, y: &DVector<T>) -> Result<DMatrix<T>> {
        self.check_measurements(y)?;
        Ok(match self {
            LinearMap::SamplingMask(mask) => mask.scatter(y),
            LinearMap::PartialDct2D(dct) => dct.scatter_grid(y),
        })
    }

    /// Reads the measurement positions out of an `m × n` matrix form.
    pub fn from_grid(&self, grid: &DMatrix<T>) -> Result<DVector<T>> {
        self.check_domain(grid)?;
        Ok(match self {
            LinearMap::SamplingMask(mask) => mask.gather(grid),
            LinearMap::PartialDct2D(dct) => dct.gather_grid(grid),
        })
    }

    /// The "matrix form of b" used to initialise every solver: `A*(b)`, which
    /// for a mask is the zero-filled observation.
    pub fn data_matrix(&self, b: &DVector<T>) -> Result<DMatrix<T>> {
        self.adjoint(b)
    }

    /// Euclidean projection of `Y` onto `B_δ = {X : ‖A(X) − b‖ ≤ δ}`.
    ///
    /// `δ = 0` is the exact-constraint branch `Y + A*(b − A(Y))`.
    pub fn project_ball(&self, y: &DMatrix<T>, b: &DVector<T>, delta: T) -> Result<DMatrix<T>> {
        if !(delta >= T::zero()) {
            return Err(Error::arg("ball radius must be nonnegative"));
        }
        self.check_domain(y)?;
        self.check_measurements(b)?;
        Ok(self.project_ball_unchecked(y, b, delta))
    }

    pub(crate) fn project_ball_unchecked(
        &self,
        y: &DMatrix<T>,
        b: &DVector<T>,
        delta: T,
    ) -> DMatrix<T> {
        let deficit = b - self.apply_unchecked(y);
        if delta == T::zero() {
            return y + self.adjoint_unchecked(&deficit);
        }
        let eta = (deficit.norm() / delta - T::one()).max(T::zero());
        if eta == T::zero() {
            return y.clone();
        }
        y + self.adjoint_unchecked(&deficit) * (eta / (eta + T::one()))
    }

    /// `‖(I − α/(1+α) A*A)((I + α A*A)(X)) − X‖_F`, which vanishes for a tight
    /// frame.
    pub fn inverse_identity_check(&self, alpha: T, x: &DMatrix<T>) -> Result<T> {
        if !(alpha > T::zero()) {
            return Err(Error::arg("alpha must be positive"));
        }
        self.check_domain(x)?;
        let forward = x + self.normal(x) * alpha;
        let back = &forward - self.normal(&forward) * (alpha / (T::one() + alpha));
        Ok((back - x).norm())
    }
}

/// `count` distinct positions in `0..len`, sorted. With `force_zero`,
/// position 0 is always included.
fn sample_flat<R: Rng>(rng: &mut R, len: usize, count: usize, force_zero: bool) -> Vec<usize> {
    let mut flat: Vec<usize> = if force_zero {
        let mut rest: Vec<usize> = rand::seq::index::sample(rng, len - 1, count - 1)
            .into_iter()
            .map(|k| k + 1)
            .collect();
        rest.push(0);
        rest
    } else {
        rand::seq::index::sample(rng, len, count).into_vec()
    };
    flat.sort_unstable();
    flat
}
