//! Singular value estimation: pick the truncation rank from the last
//! significant jump in the second differences of a sorted spectrum.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Spectrum diagnostics behind one rank estimate.
///
/// Indices are 0-based here; `st[i]` is `|s[i] − s[i+1]|` and `stt[i]` is
/// `|st[i+1] − st[i]|`. The estimate is the 1-based position of the last
/// entry of `stt` above `kappa`, or 0 when there is none.
#[derive(Clone, Debug, PartialEq)]
pub struct SveProfile<T: Real> {
    pub s: Vec<T>,
    pub st: Vec<T>,
    pub stt: Vec<T>,
    pub kappa: T,
    pub rank: usize,
}

pub fn estimate_rank<T: Real>(s: &[T], kappa: T) -> Result<SveProfile<T>> {
    if s.len() < 3 {
        return Err(Error::arg(format!(
            "need at least 3 singular values, got {}",
            s.len()
        )));
    }
    if !(kappa > T::zero()) {
        return Err(Error::arg("kappa must be positive"));
    }
    if s.iter().any(|&v| !(v >= T::zero())) {
        return Err(Error::arg("singular values must be nonnegative"));
    }
    if s.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::arg("singular values must be nonincreasing"));
    }
    let st: Vec<T> = s.windows(2).map(|w| (w[0] - w[1]).abs()).collect();
    let stt: Vec<T> = st.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let rank = stt.iter().rposition(|&v| v > kappa).map_or(0, |i| i + 1);
    Ok(SveProfile {
        s: s.to_vec(),
        st,
        stt,
        kappa,
        rank,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KappaMode {
    /// Natural images: `κ = √(mn) / (3s)`.
    RealHeuristic,
    /// Synthetic low-rank data: `κ = s √(mn) / 30`.
    SyntheticHeuristic,
}

pub fn default_kappa(m: usize, n: usize, s: f64, mode: KappaMode) -> Result<f64> {
    if m == 0 || n == 0 {
        return Err(Error::arg("matrix dimensions must be positive"));
    }
    if !(s > 0.0) {
        return Err(Error::arg("heuristic scale s must be positive"));
    }
    let root = ((m * n) as f64).sqrt();
    Ok(match mode {
        KappaMode::RealHeuristic => root / (3.0 * s),
        KappaMode::SyntheticHeuristic => s * root / 30.0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KappaRule {
    Explicit(f64),
    Heuristic { mode: KappaMode, s: f64 },
}

impl KappaRule {
    pub fn resolve(&self, m: usize, n: usize) -> Result<f64> {
        match *self {
            KappaRule::Explicit(k) if k > 0.0 => Ok(k),
            KappaRule::Explicit(k) => Err(Error::arg(format!("kappa must be positive, got {k}"))),
            KappaRule::Heuristic { mode, s } => default_kappa(m, n, s, mode),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SveConfig {
    pub kappa: KappaRule,
    /// Cap on rank-estimation rounds.
    pub max_outer: usize,
    /// Consecutive equal estimates that count as stable.
    pub stability: usize,
}

impl SveConfig {
    pub fn new(kappa: KappaRule) -> Self {
        SveConfig {
            kappa,
            max_outer: 10,
            stability: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_outer == 0 {
            return Err(Error::arg("max_outer must be at least 1"));
        }
        if self.stability < 2 {
            return Err(Error::arg("stability must be at least 2"));
        }
        if let KappaRule::Heuristic { s, .. } = self.kappa {
            if !(s > 0.0) {
                return Err(Error::arg("heuristic scale s must be positive"));
            }
        }
        Ok(())
    }
}
