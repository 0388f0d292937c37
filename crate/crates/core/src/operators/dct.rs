use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Orthonormal type-II DCT matrix of size `n × n`: row `k` is the `k`-th basis
/// vector, so `C x` transforms and `Cᵀ c` inverts.
pub fn dct2_matrix<T: Real>(n: usize) -> DMatrix<T> {
    let nf = n as f64;
    DMatrix::from_fn(n, n, |k, i| {
        let scale = if k == 0 {
            (1.0 / nf).sqrt()
        } else {
            (2.0 / nf).sqrt()
        };
        let angle = std::f64::consts::PI * (2.0 * i as f64 + 1.0) * k as f64 / (2.0 * nf);
        T::lit(scale * angle.cos())
    })
}

/// Restriction of the full orthonormal 2-D DCT to a set of kept coefficients.
///
/// The full transform is `C_m X C_nᵀ` (rows, then columns). `kept` indexes the
/// coefficient grid flattened row-major. Because the full transform is
/// orthogonal, keeping any subset of coefficients gives `A A* = I`.
#[derive(Clone, Debug)]
pub struct PartialDct2D<T: Real> {
    rows: usize,
    cols: usize,
    kept: Vec<usize>,
    basis_rows: DMatrix<T>,
    basis_cols: DMatrix<T>,
}

impl<T: Real> PartialDct2D<T> {
    pub fn new(rows: usize, cols: usize, kept: Vec<usize>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::arg("DCT domain has an empty dimension"));
        }
        let mut seen = vec![false; rows * cols];
        for &k in &kept {
            if k >= rows * cols {
                return Err(Error::arg(format!(
                    "frequency index {k} outside {rows}x{cols}"
                )));
            }
            if seen[k] {
                return Err(Error::arg(format!("duplicate frequency index {k}")));
            }
            seen[k] = true;
        }
        Ok(PartialDct2D {
            rows,
            cols,
            kept,
            basis_rows: dct2_matrix(rows),
            basis_cols: dct2_matrix(cols),
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    pub fn len(&self) -> usize {
        self.kept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }

    /// Full coefficient grid `C_m X C_nᵀ`.
    pub fn forward(&self, x: &DMatrix<T>) -> DMatrix<T> {
        &self.basis_rows * x * self.basis_cols.transpose()
    }

    /// Inverse of [`forward`](Self::forward).
    pub fn inverse(&self, coeffs: &DMatrix<T>) -> DMatrix<T> {
        self.basis_rows.transpose() * coeffs * &self.basis_cols
    }

    pub(crate) fn gather_grid(&self, grid: &DMatrix<T>) -> DVector<T> {
        let n = self.cols;
        DVector::from_iterator(
            self.kept.len(),
            self.kept.iter().map(|&k| grid[(k / n, k % n)]),
        )
    }

    pub(crate) fn scatter_grid(&self, y: &DVector<T>) -> DMatrix<T> {
        let n = self.cols;
        let mut grid = DMatrix::zeros(self.rows, self.cols);
        for (&k, &v) in self.kept.iter().zip(y.iter()) {
            grid[(k / n, k % n)] = v;
        }
        grid
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_is_orthonormal() {
        for n in [1, 2, 5, 8] {
            let c = dct2_matrix::<f64>(n);
            assert!((&c * c.transpose() - DMatrix::identity(n, n)).norm() < 1e-12);
        }
    }

    #[test]
    fn matches_direct_sum() {
        // Direct evaluation of the orthonormal DCT-II on a short vector.
        let x = [1.0, -2.0, 0.5, 3.0];
        let n = x.len() as f64;
        let c = dct2_matrix::<f64>(4);
        for k in 0..4 {
            let alpha = if k == 0 {
                (1.0 / n).sqrt()
            } else {
                (2.0 / n).sqrt()
            };
            let direct: f64 = x
                .iter()
                .enumerate()
                .map(|(i, v)| v * (std::f64::consts::PI * (i as f64 + 0.5) * k as f64 / n).cos())
                .sum::<f64>()
                * alpha;
            let via: f64 = (0..4).map(|i| c[(k, i)] * x[i]).sum();
            assert!((direct - via).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_image_has_only_dc() {
        let op = PartialDct2D::<f64>::new(3, 4, vec![0]).unwrap();
        let grid = op.forward(&DMatrix::from_element(3, 4, 2.0));
        assert!((grid[(0, 0)] - 2.0 * (12.0f64).sqrt()).abs() < 1e-12);
        assert!(grid.iter().skip(1).all(|v| v.abs() < 1e-12));
    }
}
