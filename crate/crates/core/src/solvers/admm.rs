use nalgebra::{DMatrix, DVector};

use super::{diverged, DivergenceGuard, IterRecord, SolverConfig, StageTrace, Subproblem};
use crate::error::{Error, Result};
use crate::linalg::{all_finite, shrink_with_spectrum, TruncationPair};
use crate::operators::LinearMap;
use crate::scalar::Real;

/// Iterates of the two-block splitting `X = Y, Y ∈ B_δ` with multiplier `Z`.
#[derive(Clone, Debug)]
pub struct AdmmState<T: Real> {
    pub x: DMatrix<T>,
    pub y: DMatrix<T>,
    pub z: DMatrix<T>,
    pub k: usize,
}

impl<T: Real> AdmmState<T> {
    /// `X₁ = Y₁ = Z₁ = start`.
    pub fn new(start: DMatrix<T>) -> Self {
        AdmmState {
            y: start.clone(),
            z: start.clone(),
            x: start,
            k: 0,
        }
    }

    /// One sweep; returns the relative squared change in `X`, the relative
    /// squared gap `‖X − Y‖_F²` and the new objective.
    pub(crate) fn step(
        &mut self,
        sp: &Subproblem<'_, T>,
        beta: T,
        gamma: T,
        delta: T,
    ) -> Result<(T, T, T)> {
        let inv_beta = T::one() / beta;
        let (x_new, spectrum) = shrink_with_spectrum(&(&self.y + &self.z * inv_beta), inv_beta)?;
        let target = &x_new + (&sp.correction - &self.z) * inv_beta;
        let y_new = sp.op.project_ball_unchecked(&target, sp.b, delta);
        self.z -= (&x_new - &y_new) * (gamma * beta);

        let change = sp.relative_change(&x_new, &self.x);
        let gap = sp.relative_change(&x_new, &y_new);
        let objective = spectrum.sum() - sp.pair.trace_term(&x_new);
        self.x = x_new;
        self.y = y_new;
        self.k += 1;
        Ok((change, gap, objective))
    }
}

/// TNNR-ADMM for `min ‖X‖_* − Tr(L X Rᵀ)` s.t. `‖A(X) − b‖ ≤ δ`.
///
/// Each sweep is
///
/// ```text
/// X ← D_{1/β}(Y + Z/β)
/// Y ← P_{B_δ}(X + (LᵀR − Z)/β)
/// Z ← Z − γβ(X − Y)
/// ```
///
/// starting from `X = Y = Z = A*(b)`, until both the relative squared change
/// in `X` and the relative squared gap `‖X − Y‖_F²` drop below
/// `cfg.inner_tol`, or `cfg.max_inner_iters` sweeps have run.
pub fn tnnr_admm<T: Real>(
    op: &LinearMap<T>,
    b: &DVector<T>,
    pair: &TruncationPair<T>,
    delta: T,
    cfg: &SolverConfig,
) -> Result<(DMatrix<T>, StageTrace)> {
    run(op, b, pair, delta, cfg, None, 0)
}

pub(crate) fn run<T: Real>(
    op: &LinearMap<T>,
    b: &DVector<T>,
    pair: &TruncationPair<T>,
    delta: T,
    cfg: &SolverConfig,
    start: Option<&DMatrix<T>>,
    stage: usize,
) -> Result<(DMatrix<T>, StageTrace)> {
    cfg.validate()?;
    if !(delta >= T::zero()) {
        return Err(Error::arg("ball radius must be nonnegative"));
    }
    let sp = Subproblem::new(op, b, pair)?;
    let mut state = AdmmState::new(sp.start_matrix(start)?);
    let beta = T::lit(cfg.beta);
    let gamma = T::lit(cfg.gamma);
    let tol = T::lit(cfg.inner_tol);

    let guard = DivergenceGuard::new(
        super::objective(&state.x, pair)?.as_f64(),
        sp.data_norm_sq.sqrt().as_f64(),
    );
    let mut trace = StageTrace::new(stage, pair.rank());
    trace.inner_converged = false;
    while state.k < cfg.max_inner_iters {
        let (change, gap, obj) = state.step(&sp, beta, gamma, delta)?;
        trace.records.push(IterRecord {
            stage,
            l: 1,
            k: state.k,
            objective: obj.as_f64(),
            residual: sp.residual(&state.x).as_f64(),
            beta: cfg.beta,
        });
        if let Some(reason) = guard.check(obj.as_f64(), all_finite(&state.x)) {
            trace.inner_iterations.push(state.k);
            return Err(diverged(stage, state.k, reason, trace));
        }
        if change <= tol && gap <= tol {
            trace.inner_converged = true;
            break;
        }
    }
    trace.inner_iterations.push(state.k);
    Ok((state.x, trace))
}
