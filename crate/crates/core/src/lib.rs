//! Low-rank matrix recovery by truncated nuclear norm regularisation with
//! automatic rank estimation.
//!
//! Numeric routines are generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod linalg;
pub mod operators;
pub mod rng;
pub mod scalar;
pub mod solvers;
pub mod sve;

pub use error::{Error, Result};
pub use linalg::{
    dense_from_row_major, nuclear_norm, shrink, svd, truncated_nuclear_norm, truncation_pair,
    DenseMatrix, SvdFactors, TruncationPair,
};
pub use operators::{LinearMap, MeasurementVector, OperatorKind, PartialDct2D, SamplingMask};
pub use scalar::Real;
pub use solvers::{
    lrisd, objective, q_adjoint, solve_stage, tnnr_admm, tnnr_admmap, tnnr_apgl, InnerSolver,
    LrisdOutput, RankPolicy, SolverConfig, StageTrace,
};
pub use sve::{default_kappa, estimate_rank, KappaMode, KappaRule, SveConfig, SveProfile};

pub type Matrix64 = DenseMatrix<f64>;
pub type Matrix32 = DenseMatrix<f32>;
pub type LinearMap64 = LinearMap<f64>;
pub type LinearMap32 = LinearMap<f32>;
pub type TruncationPair64 = TruncationPair<f64>;
pub type SveProfile64 = SveProfile<f64>;
pub type LrisdOutput64 = LrisdOutput<f64>;
