//! Inner solvers for the fixed-`(L, R)` convex subproblems and the multi-stage
//! outer loop that alternates rank estimation with those solves.
//!
//! All three inner solvers minimise `‖X‖_* − Tr(L X Rᵀ)` under a measurement
//! fit, where `A A* = I`:
//!
//! * [`tnnr_admm`] and [`tnnr_admmap`]: subject to `‖A(X) − b‖ ≤ δ`
//!   (`δ = 0` is the equality-constrained model);
//! * [`tnnr_apgl`]: with the penalty `(μ/2)‖A(X) − b‖²` instead.

mod admm;
mod admmap;
mod apgl;
mod lrisd;
mod trace;

use nalgebra::{DMatrix, DVector};

pub use admm::{tnnr_admm, AdmmState};
pub use admmap::{q_adjoint, q_forward, tnnr_admmap, AdmmapState};
pub use apgl::{apgl_gradient, apgl_smooth_part, momentum_next, tnnr_apgl, ApglState};
pub use lrisd::{lrisd, solve_stage, LrisdOutput, RankPolicy};
pub use trace::{write_trace_csv, IterRecord, StageTrace};

use crate::error::{Error, Result};
use crate::linalg::{nuclear_norm, TruncationPair};
use crate::operators::LinearMap;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerSolver {
    Admm,
    Apgl,
    Admmap,
}

impl std::fmt::Display for InnerSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InnerSolver::Admm => "admm",
            InnerSolver::Apgl => "apgl",
            InnerSolver::Admmap => "admmap",
        })
    }
}

impl std::str::FromStr for InnerSolver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "admm" => Ok(InnerSolver::Admm),
            "apgl" => Ok(InnerSolver::Apgl),
            "admmap" => Ok(InnerSolver::Admmap),
            other => Err(Error::arg(format!(
                "unknown solver '{other}' (admm|apgl|admmap)"
            ))),
        }
    }
}

/// Numeric knobs shared by the inner solvers and the outer loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    /// ADMM penalty; initial penalty for ADMMAP.
    pub beta: f64,
    /// Multiplier step length for ADMM.
    pub gamma: f64,
    /// Penalty weight of the unconstrained (APGL) model.
    pub mu: f64,
    /// Measurement-ball radius for the constrained models.
    pub delta: f64,
    /// Inner stopping threshold on `‖X_{k+1} − X_k‖_F² / ‖Data‖_F²`.
    pub inner_tol: f64,
    /// Same quantity, for successive `(L, R)` refreshes.
    pub outer_tol: f64,
    pub max_inner_iters: usize,
    /// Cap on `(L, R)` refreshes per stage.
    pub max_refreshes: usize,
    pub beta_max: f64,
    pub rho0: f64,
    pub eps_adapt: f64,
    /// Reject APGL steps that raise the objective (monotone variant).
    pub apgl_monotone: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            beta: 1e-3,
            gamma: 1.0,
            mu: 1.0,
            delta: 0.0,
            inner_tol: 1e-4,
            outer_tol: 1e-2,
            max_inner_iters: 1000,
            max_refreshes: 30,
            beta_max: 1e6,
            rho0: 1.9,
            eps_adapt: 1e-3,
            apgl_monotone: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("mu", self.mu),
            ("inner_tol", self.inner_tol),
            ("outer_tol", self.outer_tol),
            ("beta_max", self.beta_max),
            ("eps_adapt", self.eps_adapt),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::arg(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::arg(format!(
                "delta must be nonnegative, got {}",
                self.delta
            )));
        }
        if !(self.rho0 >= 1.0) {
            return Err(Error::arg(format!(
                "rho0 must be at least 1, got {}",
                self.rho0
            )));
        }
        if self.beta > self.beta_max {
            return Err(Error::arg("beta exceeds beta_max"));
        }
        if self.max_inner_iters == 0 || self.max_refreshes == 0 {
            return Err(Error::arg("iteration caps must be positive"));
        }
        Ok(())
    }
}

/// `‖X‖_* − Tr(L X Rᵀ)`.
pub fn objective<T: Real>(x: &DMatrix<T>, pair: &TruncationPair<T>) -> Result<T> {
    if pair.domain() != x.shape() {
        return Err(Error::shape(
            format!("{}x{}", pair.domain().0, pair.domain().1),
            format!("{}x{}", x.nrows(), x.ncols()),
        ));
    }
    Ok(nuclear_norm(x)? - pair.trace_term(x))
}

/// Validated data shared by every iteration of one inner solve.
pub(crate) struct Subproblem<'a, T: Real> {
    pub op: &'a LinearMap<T>,
    pub b: &'a DVector<T>,
    pub pair: &'a TruncationPair<T>,
    /// `LᵀR`.
    pub correction: DMatrix<T>,
    /// `A*(b)`.
    pub data: DMatrix<T>,
    pub data_norm_sq: T,
}

impl<'a, T: Real> Subproblem<'a, T> {
    pub fn new(
        op: &'a LinearMap<T>,
        b: &'a DVector<T>,
        pair: &'a TruncationPair<T>,
    ) -> Result<Self> {
        let data = op.data_matrix(b)?;
        if pair.domain() != op.shape() {
            return Err(Error::shape(
                format!("truncation pair over {:?}", op.shape()),
                format!("{:?}", pair.domain()),
            ));
        }
        let data_norm_sq = data.norm_squared();
        Ok(Subproblem {
            op,
            b,
            pair,
            correction: pair.correction(),
            data,
            data_norm_sq,
        })
    }

    /// Relative squared change used by every stopping test.
    pub fn relative_change(&self, new: &DMatrix<T>, old: &DMatrix<T>) -> T {
        let d = (new - old).norm_squared();
        if self.data_norm_sq > T::zero() {
            d / self.data_norm_sq
        } else {
            d
        }
    }

    pub fn residual(&self, x: &DMatrix<T>) -> T {
        (self.op.apply_unchecked(x) - self.b).norm()
    }

    pub fn start_matrix(&self, start: Option<&DMatrix<T>>) -> Result<DMatrix<T>> {
        match start {
            None => Ok(self.data.clone()),
            Some(x) if x.shape() == self.op.shape() => Ok(x.clone()),
            Some(x) => Err(Error::shape(
                format!("{:?}", self.op.shape()),
                format!("{:?}", x.shape()),
            )),
        }
    }
}

/// Aborts an inner solve whose objective becomes non-finite or grows past
/// `10⁶` times its starting value.
pub(crate) struct DivergenceGuard {
    limit: f64,
}

impl DivergenceGuard {
    /// `scale` floors the baseline so a start with zero objective (an
    /// iterate of rank at most r) does not trip the guard at once.
    pub fn new(initial_objective: f64, scale: f64) -> Self {
        DivergenceGuard {
            limit: 1e6 * initial_objective.abs().max(scale).max(1e-12),
        }
    }

    pub fn check(&self, objective: f64, iterate_finite: bool) -> Option<String> {
        if !objective.is_finite() || !iterate_finite {
            Some("non-finite iterate".into())
        } else if objective > self.limit {
            Some(format!(
                "objective {objective:e} exceeds limit {:e}",
                self.limit
            ))
        } else {
            None
        }
    }
}

pub(crate) fn diverged(stage: usize, iteration: usize, reason: String, trace: StageTrace) -> Error {
    Error::Diverged {
        stage,
        iteration,
        reason,
        trace: Box::new(trace),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::truncation_pair;

    #[test]
    fn objective_examples() {
        let x = DMatrix::from_diagonal(&DVector::from_row_slice(&[5.0f64, 3.0, 1.0]));
        let empty = TruncationPair::empty(3, 3);
        assert!((objective(&x, &empty).unwrap() - 9.0).abs() < 1e-12);
        let pair = truncation_pair(&x, 1).unwrap();
        assert!((objective(&x, &pair).unwrap() - 4.0).abs() < 1e-12);
        assert!(objective(&x, &TruncationPair::empty(2, 3)).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = [
            SolverConfig {
                beta: 0.0,
                ..Default::default()
            },
            SolverConfig {
                delta: -1.0,
                ..Default::default()
            },
            SolverConfig {
                rho0: 0.5,
                ..Default::default()
            },
            SolverConfig {
                inner_tol: 0.0,
                ..Default::default()
            },
            SolverConfig {
                max_inner_iters: 0,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn guard_trips() {
        let guard = DivergenceGuard::new(2.0, 0.0);
        assert!(guard.check(1.0, true).is_none());
        assert!(guard.check(3e6, true).is_some());
        assert!(guard.check(f64::NAN, true).is_some());
        assert!(guard.check(1.0, false).is_some());
        let floored = DivergenceGuard::new(0.0, 5.0);
        assert!(floored.check(4e6, true).is_none());
        assert!(floored.check(6e6, true).is_some());
    }

    #[test]
    fn solver_names_round_trip() {
        for s in [InnerSolver::Admm, InnerSolver::Apgl, InnerSolver::Admmap] {
            assert_eq!(s.to_string().parse::<InnerSolver>().unwrap(), s);
        }
        assert!("newton".parse::<InnerSolver>().is_err());
    }
}
