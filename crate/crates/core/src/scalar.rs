//! Scalar abstraction shared by every numeric routine in the crate.

use nalgebra::{DMatrix, RealField};
use num_traits::ToPrimitive;

/// Real floating-point scalar: `f32` or `f64`.
///
/// `RealField` already pulls in `num_traits::FromPrimitive`; `ToPrimitive` is
/// added so diagnostics can be reported as `f64` regardless of `T`.
pub trait Real: RealField + Copy + ToPrimitive + sealed::Factor {
    /// Converts an `f64` literal or knob into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    /// Lossy conversion for traces and reports.
    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub(crate) mod sealed {
    use super::DMatrix;

    /// Thin SVD backend: `(U, s, V)` with `U` `m × q`, `V` `n × q`,
    /// `q = min(m, n)`. Runs sequentially so results do not depend on the
    /// host's thread count.
    pub trait Factor: Sized {
        fn thin_svd(x: &DMatrix<Self>) -> Option<(DMatrix<Self>, Vec<Self>, DMatrix<Self>)>;
    }

    macro_rules! faer_factor {
        ($t:ty) => {
            impl Factor for $t {
                fn thin_svd(x: &DMatrix<$t>) -> Option<(DMatrix<$t>, Vec<$t>, DMatrix<$t>)> {
                    let (m, n) = x.shape();
                    let a = faer::MatRef::from_column_major_slice(x.as_slice(), m, n);
                    let f = a.thin_svd().ok()?;
                    let q = m.min(n);
                    let (u, v) = (f.U(), f.V());
                    let s = f.S().column_vector();
                    Some((
                        DMatrix::from_fn(m, q, |i, j| u[(i, j)]),
                        (0..q).map(|i| s[i]).collect(),
                        DMatrix::from_fn(n, q, |i, j| v[(i, j)]),
                    ))
                }
            }
        };
    }

    faer_factor!(f32);
    faer_factor!(f64);
}
