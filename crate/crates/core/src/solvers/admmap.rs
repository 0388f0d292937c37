//! ADMM with adaptive penalty on the block reformulation
//!
//! ```text
//! min ‖X‖_* − Tr(L Y Rᵀ)   s.t.   P(X) + Q(Y) = C
//! P(X) = [X 0; 0 0],  Q(Y) = [−Y 0; 0 A(Y)],  C = [0 0; 0 b + ζ]
//! ```
//!
//! where measurement-space blocks are held in their `m × n` matrix form (see
//! [`LinearMap::to_grid`]) and `ζ`, the slack of the ball constraint, stays in
//! `{‖ζ‖ ≤ δ}`.

use nalgebra::{DMatrix, DVector};

use super::{diverged, DivergenceGuard, IterRecord, SolverConfig, StageTrace, Subproblem};
use crate::error::{Error, Result};
use crate::linalg::{all_finite, shrink_with_spectrum, TruncationPair};
use crate::operators::LinearMap;
use crate::scalar::Real;

/// `Q(Y) = [−Y 0; 0 A(Y)]` as a `2m × 2n` matrix.
pub fn q_forward<T: Real>(y: &DMatrix<T>, op: &LinearMap<T>) -> Result<DMatrix<T>> {
    let (m, n) = op.shape();
    let measured = op.to_grid(&op.apply(y)?)?;
    let mut out = DMatrix::zeros(2 * m, 2 * n);
    out.view_mut((0, 0), (m, n)).copy_from(&(-y));
    out.view_mut((m, n), (m, n)).copy_from(&measured);
    Ok(out)
}

/// `Q*(W) = −W₁₁ + A*(W₂₂)`, with `W₂₂` read back to a measurement vector.
pub fn q_adjoint<T: Real>(w: &DMatrix<T>, op: &LinearMap<T>) -> Result<DMatrix<T>> {
    let (m, n) = op.shape();
    if w.shape() != (2 * m, 2 * n) {
        return Err(Error::shape(
            format!("{}x{}", 2 * m, 2 * n),
            format!("{}x{}", w.nrows(), w.ncols()),
        ));
    }
    let w22 = op.from_grid(&w.view((m, n), (m, n)).into_owned())?;
    Ok(op.adjoint(&w22)? - w.view((0, 0), (m, n)))
}

#[derive(Clone, Debug)]
pub struct AdmmapState<T: Real> {
    pub x: DMatrix<T>,
    pub y: DMatrix<T>,
    /// `2m × 2n` multiplier; the off-diagonal blocks stay zero.
    pub z: DMatrix<T>,
    /// Matrix form of the slack `ζ`.
    pub xi: DMatrix<T>,
    pub beta: T,
    pub k: usize,
}

/// What one sweep did.
pub(crate) struct Sweep<T> {
    pub change: T,
    /// `‖P(X) + Q(Y) − C‖_F² / ‖Data‖_F²` before the multiplier update.
    pub gap: T,
    pub objective: T,
    /// Penalty used during the sweep.
    pub beta_used: T,
    #[cfg_attr(not(test), allow(dead_code))]
    pub increased: bool,
}

impl<T: Real> AdmmapState<T> {
    /// `X₁ = Y₁ = start`, `Z₁ = 0`. For `δ > 0` the slack starts at the
    /// projection of `A(X₁) − b` onto the ball.
    pub(crate) fn new(sp: &Subproblem<'_, T>, start: DMatrix<T>, beta: T, delta: T) -> Self {
        let (m, n) = sp.op.shape();
        let xi = if delta > T::zero() {
            let zeta = project_vector(sp.op.apply_unchecked(&start) - sp.b, delta);
            sp.op.to_grid(&zeta).expect("length checked")
        } else {
            DMatrix::zeros(m, n)
        };
        AdmmapState {
            y: start.clone(),
            x: start,
            z: DMatrix::zeros(2 * m, 2 * n),
            xi,
            beta,
            k: 0,
        }
    }

    fn z11(&self, m: usize, n: usize) -> DMatrix<T> {
        self.z.view((0, 0), (m, n)).into_owned()
    }

    fn z22(&self, m: usize, n: usize) -> DMatrix<T> {
        self.z.view((m, n), (m, n)).into_owned()
    }

    /// Closed-form `Y` update: solves `Q*Q(Y) = rhs` with `Q*Q = I + A*A`
    /// inverted as `I − ½A*A`.
    pub(crate) fn y_update(&self, sp: &Subproblem<'_, T>, x_new: &DMatrix<T>) -> DMatrix<T> {
        let g = self.y_rhs_split(sp, x_new);
        let (base, measured) = g;
        let half = T::lit(0.5);
        &base - sp.op.normal(&base) * half + sp.op.adjoint_unchecked(&measured) * half
    }

    /// Right-hand side of the normal equation for `Y`, split as
    /// `base + A*(measured)` with
    /// `base = X + (LᵀR − Z₁₁)/β` and `measured = b + ζ + Z₂₂/β`.
    fn y_rhs_split(&self, sp: &Subproblem<'_, T>, x_new: &DMatrix<T>) -> (DMatrix<T>, DVector<T>) {
        let (m, n) = sp.op.shape();
        let inv_beta = T::one() / self.beta;
        let base = x_new + (&sp.correction - self.z11(m, n)) * inv_beta;
        let zeta = sp.op.from_grid(&self.xi).expect("shape checked");
        let z22 = sp.op.from_grid(&self.z22(m, n)).expect("shape checked");
        let measured = sp.b + zeta + z22 * inv_beta;
        (base, measured)
    }

    #[cfg(test)]
    pub(crate) fn y_rhs(&self, sp: &Subproblem<'_, T>, x_new: &DMatrix<T>) -> DMatrix<T> {
        let (base, measured) = self.y_rhs_split(sp, x_new);
        base + sp.op.adjoint_unchecked(&measured)
    }

    pub(crate) fn step(
        &mut self,
        sp: &Subproblem<'_, T>,
        cfg: &SolverConfig,
        delta: T,
    ) -> Result<Sweep<T>> {
        let (m, n) = sp.op.shape();
        let beta = self.beta;
        let inv_beta = T::one() / beta;

        let (x_new, spectrum) =
            shrink_with_spectrum(&(&self.y + self.z11(m, n) * inv_beta), inv_beta)?;
        let y_new = self.y_update(sp, &x_new);

        // Z ← Z − β(P(X) + Q(Y) − C)
        let b_grid = sp.op.to_grid(sp.b)?;
        let ay_grid = sp.op.to_grid(&sp.op.apply_unchecked(&y_new))?;
        let gap11 = &x_new - &y_new;
        let gap22 = &ay_grid - &b_grid - &self.xi;
        let gap = sp.relative_change(&gap11, &DMatrix::zeros(m, n))
            + sp.relative_change(&gap22, &DMatrix::zeros(m, n));
        {
            let mut z11 = self.z.view_mut((0, 0), (m, n));
            z11 -= &gap11 * beta;
        }
        {
            let mut z22 = self.z.view_mut((m, n), (m, n));
            z22 -= &gap22 * beta;
        }

        if delta > T::zero() {
            // (C2)₂₂ = A(Y) − b − Z₂₂/β, projected onto the δ-ball.
            let c2 = &ay_grid - &b_grid - self.z22(m, n) * inv_beta;
            let zeta = project_vector(sp.op.from_grid(&c2)?, delta);
            self.xi = sp.op.to_grid(&zeta)?;
        }

        let dx = (&x_new - &self.x).norm();
        let dy = (&y_new - &self.y).norm();
        let c_norm = (&b_grid + &self.xi).norm();
        let ratio = if c_norm > T::zero() {
            beta * dx.max(dy) / c_norm
        } else {
            T::zero()
        };
        let increased = ratio < T::lit(cfg.eps_adapt);
        let rho = if increased {
            T::lit(cfg.rho0)
        } else {
            T::one()
        };
        self.beta = (rho * beta).min(T::lit(cfg.beta_max));

        let change = sp.relative_change(&x_new, &self.x);
        let objective = spectrum.sum() - sp.pair.trace_term(&x_new);
        self.x = x_new;
        self.y = y_new;
        self.k += 1;
        Ok(Sweep {
            change,
            gap,
            objective,
            beta_used: beta,
            increased,
        })
    }
}

fn project_vector<T: Real>(v: DVector<T>, radius: T) -> DVector<T> {
    let norm = v.norm();
    if norm <= radius {
        v
    } else {
        v * (radius / norm)
    }
}

/// TNNR-ADMMAP for `min ‖X‖_* − Tr(L X Rᵀ)` s.t. `‖A(X) − b‖ ≤ δ`.
///
/// The penalty grows as `β ← min(β_max, ρβ)` with `ρ = ρ₀` whenever
/// `β·max(‖ΔX‖_F, ‖ΔY‖_F)/‖C‖_F < ε_adapt` and `ρ = 1` otherwise. The slack
/// `ζ` is only updated when `δ > 0`. Stops once both the relative squared
/// change in `X` and the relative squared constraint gap drop below
/// `cfg.inner_tol`.
pub fn tnnr_admmap<T: Real>(
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
    let mut state = AdmmapState::new(&sp, sp.start_matrix(start)?, T::lit(cfg.beta), delta);
    let tol = T::lit(cfg.inner_tol);

    let guard = DivergenceGuard::new(
        super::objective(&state.x, pair)?.as_f64(),
        sp.data_norm_sq.sqrt().as_f64(),
    );
    let mut trace = StageTrace::new(stage, pair.rank());
    trace.inner_converged = false;
    while state.k < cfg.max_inner_iters {
        let sweep = state.step(&sp, cfg, delta)?;
        trace.records.push(IterRecord {
            stage,
            l: 1,
            k: state.k,
            objective: sweep.objective.as_f64(),
            residual: sp.residual(&state.x).as_f64(),
            beta: sweep.beta_used.as_f64(),
        });
        if let Some(reason) = guard.check(sweep.objective.as_f64(), all_finite(&state.x)) {
            trace.inner_iterations.push(state.k);
            return Err(diverged(stage, state.k, reason, trace));
        }
        if sweep.change <= tol && sweep.gap <= tol {
            trace.inner_converged = true;
            break;
        }
    }
    trace.inner_iterations.push(state.k);
    Ok((state.x, trace))
}
