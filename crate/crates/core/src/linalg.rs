//! Dense matrix values, the SVD wrapper, singular value shrinkage and the
//! truncated nuclear norm.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Real `m × n` dense matrix. Build checked values with [`dense_from_row_major`].
pub type DenseMatrix<T> = DMatrix<T>;

/// Builds a matrix from row-major entries, rejecting empty shapes, length
/// mismatches and non-finite entries.
pub fn dense_from_row_major<T: Real>(
    rows: usize,
    cols: usize,
    entries: &[T],
) -> Result<DMatrix<T>> {
    if rows == 0 || cols == 0 {
        return Err(Error::arg(format!(
            "matrix shape {rows}x{cols} has an empty dimension"
        )));
    }
    if entries.len() != rows * cols {
        return Err(Error::shape(rows * cols, entries.len()));
    }
    if let Some(pos) = entries.iter().position(|v| !v.is_finite()) {
        return Err(Error::arg(format!(
            "non-finite entry at ({}, {})",
            pos / cols,
            pos % cols
        )));
    }
    Ok(DMatrix::from_row_slice(rows, cols, entries))
}

pub fn all_finite<T: Real>(x: &DMatrix<T>) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// Frobenius inner product `⟨A, B⟩ = Σ a_ij b_ij`.
#[inline]
pub fn inner<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> T {
    a.dot(b)
}

/// Thin singular value decomposition `X = U diag(s) Vᵀ`.
///
/// `s` is nonincreasing. Each left singular vector is sign-normalised so that
/// its largest-magnitude entry (first one on ties) is nonnegative, and the
/// matching right vector is flipped with it.
#[derive(Clone, Debug)]
pub struct SvdFactors<T: Real> {
    /// `m × q` with orthonormal columns, `q = min(m, n)`.
    pub u: DMatrix<T>,
    pub s: DVector<T>,
    /// `n × q` with orthonormal columns.
    pub v: DMatrix<T>,
}

impl<T: Real> SvdFactors<T> {
    pub fn reconstruct(&self) -> DMatrix<T> {
        self.rebuild_with(|s| s)
    }

    pub fn nuclear_norm(&self) -> T {
        self.s.sum()
    }

    /// `U diag(f(s)) Vᵀ`, skipping components where `f(s_i)` is zero.
    fn rebuild_with(&self, f: impl Fn(T) -> T) -> DMatrix<T> {
        let (m, n) = (self.u.nrows(), self.v.nrows());
        let kept: Vec<(usize, T)> = self
            .s
            .iter()
            .enumerate()
            .map(|(i, &sigma)| (i, f(sigma)))
            .filter(|&(_, w)| w != T::zero())
            .collect();
        if kept.is_empty() {
            return DMatrix::zeros(m, n);
        }
        let mut us = DMatrix::zeros(m, kept.len());
        let mut vs = DMatrix::zeros(n, kept.len());
        for (c, &(i, w)) in kept.iter().enumerate() {
            us.set_column(c, &(self.u.column(i) * w));
            vs.set_column(c, &self.v.column(i));
        }
        us * vs.transpose()
    }
}

pub fn svd<T: Real>(x: &DMatrix<T>) -> Result<SvdFactors<T>> {
    let (m, n) = x.shape();
    if m == 0 || n == 0 {
        return Err(Error::arg("cannot factor an empty matrix"));
    }
    if !all_finite(x) {
        return Err(Error::arg("cannot factor a matrix with non-finite entries"));
    }
    let q = m.min(n);
    let (u, values, v) = T::thin_svd(x).ok_or(Error::Factorization)?;
    if values.iter().any(|s| !s.is_finite()) {
        return Err(Error::Factorization);
    }

    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let mut su = DMatrix::zeros(m, q);
    let mut sv = DMatrix::zeros(n, q);
    let mut s = DVector::zeros(q);
    for (dst, &src) in order.iter().enumerate() {
        let col = u.column(src);
        let mut best = T::zero();
        let mut sign = T::one();
        for &entry in col.iter() {
            if entry.abs() > best {
                best = entry.abs();
                sign = if entry < T::zero() {
                    -T::one()
                } else {
                    T::one()
                };
            }
        }
        su.set_column(dst, &(col * sign));
        sv.set_column(dst, &(v.column(src) * sign));
        // Singular values from the backend can be -0.0 for zero input.
        s[dst] = values[src].max(T::zero());
    }
    Ok(SvdFactors { u: su, s, v: sv })
}

/// Singular value shrinkage `D_τ(X) = U diag((σ_i − τ)₊) Vᵀ`, the proximal map
/// of `τ‖·‖_*`.
pub fn shrink<T: Real>(x: &DMatrix<T>, tau: T) -> Result<DMatrix<T>> {
    shrink_with_spectrum(x, tau).map(|(out, _)| out)
}

/// Like [`shrink`], also returning the shrunk singular values so callers can
/// evaluate `‖D_τ(X)‖_*` without a second factorization.
pub(crate) fn shrink_with_spectrum<T: Real>(
    x: &DMatrix<T>,
    tau: T,
) -> Result<(DMatrix<T>, DVector<T>)> {
    if !(tau >= T::zero()) {
        return Err(Error::arg("shrinkage threshold must be nonnegative"));
    }
    let f = svd(x)?;
    let shrunk = f.s.map(|s| (s - tau).max(T::zero()));
    // Exact zero once every value is cut.
    if shrunk.iter().all(|&s| s == T::zero()) {
        return Ok((DMatrix::zeros(x.nrows(), x.ncols()), shrunk));
    }
    let out = f.rebuild_with(|s| (s - tau).max(T::zero()));
    Ok((out, shrunk))
}

pub fn nuclear_norm<T: Real>(x: &DMatrix<T>) -> Result<T> {
    svd(x).map(|f| f.nuclear_norm())
}

fn check_rank<T: Real>(r: usize, x: &DMatrix<T>) -> Result<()> {
    let q = x.nrows().min(x.ncols());
    if r > q {
        return Err(Error::arg(format!(
            "truncation rank {r} exceeds min(m, n) = {q}"
        )));
    }
    Ok(())
}

/// Sum of the `min(m, n) − r` smallest singular values.
pub fn truncated_nuclear_norm<T: Real>(x: &DMatrix<T>, r: usize) -> Result<T> {
    check_rank(r, x)?;
    let f = svd(x)?;
    Ok(f.s.iter().skip(r).fold(T::zero(), |acc, &s| acc + s))
}

/// Top-`r` singular vector blocks `(L, R)` such that `Tr(L X Rᵀ)` is the sum of
/// the `r` largest singular values of the source matrix.
#[derive(Clone, Debug)]
pub struct TruncationPair<T: Real> {
    /// `r × m`, rows are left singular vectors.
    pub l: DMatrix<T>,
    /// `r × n`, rows are right singular vectors.
    pub r: DMatrix<T>,
}

impl<T: Real> TruncationPair<T> {
    pub fn empty(m: usize, n: usize) -> Self {
        TruncationPair {
            l: DMatrix::zeros(0, m),
            r: DMatrix::zeros(0, n),
        }
    }

    pub fn rank(&self) -> usize {
        self.l.nrows()
    }

    pub fn domain(&self) -> (usize, usize) {
        (self.l.ncols(), self.r.ncols())
    }

    /// `Tr(L X Rᵀ)`.
    pub fn trace_term(&self, x: &DMatrix<T>) -> T {
        let mut acc = T::zero();
        for i in 0..self.rank() {
            let li = self.l.row(i);
            let ri = self.r.row(i);
            // l_i X r_iᵀ
            acc += (li * x).dot(&ri);
        }
        acc
    }

    /// `LᵀR`, the gradient of `Tr(L X Rᵀ)` with respect to `X`.
    pub fn correction(&self) -> DMatrix<T> {
        let (m, n) = self.domain();
        if self.rank() == 0 {
            return DMatrix::zeros(m, n);
        }
        self.l.transpose() * &self.r
    }
}

pub fn truncation_pair<T: Real>(x: &DMatrix<T>, r: usize) -> Result<TruncationPair<T>> {
    check_rank(r, x)?;
    let (m, n) = x.shape();
    if r == 0 {
        return Ok(TruncationPair::empty(m, n));
    }
    let f = svd(x)?;
    Ok(TruncationPair {
        l: f.u.columns(0, r).transpose(),
        r: f.v.columns(0, r).transpose(),
    })
}
