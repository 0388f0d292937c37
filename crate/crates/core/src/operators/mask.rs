use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Entry sampling: `A(X)` reads the observed positions in index order and
/// `A*(y)` scatters into a zero matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SamplingMask {
    rows: usize,
    cols: usize,
    indices: Vec<(usize, usize)>,
}

impl SamplingMask {
    /// Positions must be distinct and in range. Order is kept as given.
    pub fn new(rows: usize, cols: usize, indices: Vec<(usize, usize)>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::arg("mask domain has an empty dimension"));
        }
        let mut seen = vec![false; rows * cols];
        for &(i, j) in &indices {
            if i >= rows || j >= cols {
                return Err(Error::arg(format!(
                    "mask index ({i}, {j}) outside {rows}x{cols}"
                )));
            }
            let flat = i * cols + j;
            if seen[flat] {
                return Err(Error::arg(format!("duplicate mask index ({i}, {j})")));
            }
            seen[flat] = true;
        }
        Ok(SamplingMask {
            rows,
            cols,
            indices,
        })
    }

    /// Every entry, row-major.
    pub fn full(rows: usize, cols: usize) -> Result<Self> {
        let indices = (0..rows)
            .flat_map(|i| (0..cols).map(move |j| (i, j)))
            .collect();
        Self::new(rows, cols, indices)
    }

    /// Builds a mask from flat row-major positions, sorted lexicographically.
    pub fn from_flat(rows: usize, cols: usize, flat: &[usize]) -> Result<Self> {
        let mut flat = flat.to_vec();
        flat.sort_unstable();
        if let Some(&bad) = flat.iter().find(|&&k| k >= rows * cols) {
            return Err(Error::arg(format!(
                "flat index {bad} outside {rows}x{cols}"
            )));
        }
        Self::new(
            rows,
            cols,
            flat.iter().map(|&k| (k / cols, k % cols)).collect(),
        )
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn indices(&self) -> &[(usize, usize)] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Indicator of observed positions.
    pub fn observed(&self) -> Vec<bool> {
        let mut out = vec![false; self.rows * self.cols];
        for &(i, j) in &self.indices {
            out[i * self.cols + j] = true;
        }
        out
    }

    /// Positions not in the mask, row-major.
    pub fn complement(&self) -> Vec<(usize, usize)> {
        let observed = self.observed();
        (0..self.rows * self.cols)
            .filter(|&k| !observed[k])
            .map(|k| (k / self.cols, k % self.cols))
            .collect()
    }

    pub(crate) fn gather<T: Real>(&self, x: &DMatrix<T>) -> DVector<T> {
        DVector::from_iterator(
            self.indices.len(),
            self.indices.iter().map(|&(i, j)| x[(i, j)]),
        )
    }

    pub(crate) fn scatter<T: Real>(&self, y: &DVector<T>) -> DMatrix<T> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for (&(i, j), &v) in self.indices.iter().zip(y.iter()) {
            out[(i, j)] = v;
        }
        out
    }
}
