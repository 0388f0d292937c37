use nalgebra::{DMatrix, DVector};

use super::{diverged, DivergenceGuard, IterRecord, SolverConfig, StageTrace, Subproblem};
use crate::error::{Error, Result};
use crate::linalg::{all_finite, shrink_with_spectrum, TruncationPair};
use crate::operators::LinearMap;
use crate::scalar::Real;

/// Momentum sequence `τ_{k+1} = (1 + √(1 + 4τ_k²)) / 2`.
pub fn momentum_next<T: Real>(tau: T) -> T {
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    (T::one() + (T::one() + four * tau * tau).sqrt()) / two
}

/// Smooth part `F(Y) = −Tr(L Y Rᵀ) + (μ/2)‖A(Y) − b‖²`.
pub fn apgl_smooth_part<T: Real>(
    op: &LinearMap<T>,
    b: &DVector<T>,
    pair: &TruncationPair<T>,
    mu: T,
    y: &DMatrix<T>,
) -> Result<T> {
    let fit = (op.apply(y)? - b).norm_squared();
    Ok(-pair.trace_term(y) + mu * fit / T::lit(2.0))
}

/// `∇F(Y) = −LᵀR + μ A*(A(Y) − b)`.
pub fn apgl_gradient<T: Real>(
    op: &LinearMap<T>,
    b: &DVector<T>,
    pair: &TruncationPair<T>,
    mu: T,
    y: &DMatrix<T>,
) -> Result<DMatrix<T>> {
    let residual = op.apply(y)? - b;
    Ok(op.adjoint(&residual)? * mu - pair.correction())
}

fn gradient<T: Real>(sp: &Subproblem<'_, T>, mu: T, y: &DMatrix<T>) -> DMatrix<T> {
    let residual = sp.op.apply_unchecked(y) - sp.b;
    sp.op.adjoint_unchecked(&residual) * mu - &sp.correction
}

#[derive(Clone, Debug)]
pub struct ApglState<T: Real> {
    pub x: DMatrix<T>,
    pub y: DMatrix<T>,
    /// Momentum parameter, starts at 1.
    pub tau: T,
    /// Full objective `F(X) + ‖X‖_*` at `x`.
    pub value: T,
    pub k: usize,
}

impl<T: Real> ApglState<T> {
    fn new(sp: &Subproblem<'_, T>, mu: T, start: DMatrix<T>) -> Result<Self> {
        let value = super::objective(&start, sp.pair)? + half_fit(sp, mu, &start);
        Ok(ApglState {
            y: start.clone(),
            x: start,
            tau: T::one(),
            value,
            k: 0,
        })
    }

    /// Returns the relative squared change in `X` and the TNNR objective.
    fn step(&mut self, sp: &Subproblem<'_, T>, mu: T, step: T, monotone: bool) -> Result<(T, T)> {
        let grad = gradient(sp, mu, &self.y);
        let (candidate, spectrum) = shrink_with_spectrum(&(&self.y - grad * step), step)?;
        let tnnr = spectrum.sum() - sp.pair.trace_term(&candidate);
        let candidate_value = tnnr + half_fit(sp, mu, &candidate);
        let tau_next = momentum_next(self.tau);

        let (x_new, value, tnnr_new) = if monotone && candidate_value > self.value {
            (
                self.x.clone(),
                self.value,
                super::objective(&self.x, sp.pair)?,
            )
        } else {
            (candidate.clone(), candidate_value, tnnr)
        };
        // Y = X_{k+1} + (τ_k/τ_{k+1})(C − X_{k+1}) + ((τ_k − 1)/τ_{k+1})(X_{k+1} − X_k);
        // the first correction vanishes whenever the candidate is accepted.
        let mut y_new = &x_new + (&x_new - &self.x) * ((self.tau - T::one()) / tau_next);
        if monotone {
            y_new += (&candidate - &x_new) * (self.tau / tau_next);
        }

        // Measured on the candidate so a rejected step near the minimiser
        // still registers as converged.
        let change = sp.relative_change(&candidate, &self.x);
        self.x = x_new;
        self.y = y_new;
        self.tau = tau_next;
        self.value = value;
        self.k += 1;
        Ok((change, tnnr_new))
    }
}

fn half_fit<T: Real>(sp: &Subproblem<'_, T>, mu: T, x: &DMatrix<T>) -> T {
    let r = sp.residual(x);
    mu * r * r / T::lit(2.0)
}

/// TNNR-APGL for `min ‖X‖_* − Tr(L X Rᵀ) + (μ/2)‖A(X) − b‖²`.
///
/// Proximal gradient steps use the fixed step `t = 1/μ` (the Lipschitz
/// constant of `∇F` is `μ‖A*A‖ = μ`); `τ_k` drives only the momentum. With
/// `cfg.apgl_monotone` a step that would raise the objective is rejected in
/// favour of the previous iterate, which keeps the objective nonincreasing.
pub fn tnnr_apgl<T: Real>(
    op: &LinearMap<T>,
    b: &DVector<T>,
    pair: &TruncationPair<T>,
    mu: T,
    cfg: &SolverConfig,
) -> Result<(DMatrix<T>, StageTrace)> {
    run(op, b, pair, mu, cfg, None, 0)
}

pub(crate) fn run<T: Real>(
    op: &LinearMap<T>,
    b: &DVector<T>,
    pair: &TruncationPair<T>,
    mu: T,
    cfg: &SolverConfig,
    start: Option<&DMatrix<T>>,
    stage: usize,
) -> Result<(DMatrix<T>, StageTrace)> {
    cfg.validate()?;
    if !(mu > T::zero()) {
        return Err(Error::arg("mu must be positive"));
    }
    let sp = Subproblem::new(op, b, pair)?;
    let mut state = ApglState::new(&sp, mu, sp.start_matrix(start)?)?;
    let step = T::one() / mu;
    let tol = T::lit(cfg.inner_tol);

    let guard = DivergenceGuard::new(
        super::objective(&state.x, pair)?.as_f64(),
        sp.data_norm_sq.sqrt().as_f64(),
    );
    let mut trace = StageTrace::new(stage, pair.rank());
    trace.inner_converged = false;
    while state.k < cfg.max_inner_iters {
        let (change, obj) = state.step(&sp, mu, step, cfg.apgl_monotone)?;
        trace.records.push(IterRecord {
            stage,
            l: 1,
            k: state.k,
            objective: obj.as_f64(),
            residual: sp.residual(&state.x).as_f64(),
            beta: step.as_f64(),
        });
        if let Some(reason) = guard.check(obj.as_f64(), all_finite(&state.x)) {
            trace.inner_iterations.push(state.k);
            return Err(diverged(stage, state.k, reason, trace));
        }
        if change <= tol {
            trace.inner_converged = true;
            break;
        }
    }
    trace.inner_iterations.push(state.k);
    Ok((state.x, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::shrink;
    use crate::operators::SamplingMask;

    #[test]
    fn first_momentum_step_is_golden_ratio() {
        let t2 = momentum_next(1.0f64);
        assert!((t2 - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!((t2 - 1.618034).abs() < 1e-6);
    }

    #[test]
    fn momentum_identity() {
        let mut tau = 1.0f64;
        for _ in 0..100 {
            let next = momentum_next(tau);
            assert!((next * next - next - tau * tau).abs() <= 1e-12 * (tau * tau).max(1.0));
            tau = next;
        }
    }

    #[test]
    fn fully_observed_matches_prox_of_data() {
        let data = DMatrix::from_fn(5, 4, |i, j| {
            ((i * 3 + j * 5) % 7) as f64 - 3.0 + 0.1 * i as f64
        });
        let op = LinearMap::SamplingMask(SamplingMask::full(5, 4).unwrap());
        let b = op.apply(&data).unwrap();
        let mu = 4.0;
        let cfg = SolverConfig {
            inner_tol: 1e-14,
            max_inner_iters: 2000,
            ..Default::default()
        };
        let (out, _) = tnnr_apgl(&op, &b, &TruncationPair::empty(5, 4), mu, &cfg).unwrap();
        let expected = shrink(&data, 1.0 / mu).unwrap();
        assert!((&out - &expected).norm() < 1e-6 * expected.norm());
    }

    #[test]
    fn monotone_objective() {
        let op = LinearMap::<f64>::random_dct(8, 8, 0.5, 4, false).unwrap();
        let truth = DMatrix::from_fn(8, 8, |i, j| {
            ((i + 1) as f64).sin() * (j as f64 * 0.7).cos() * 5.0
        });
        let b = op.apply(&truth).unwrap();
        let pair = crate::linalg::truncation_pair(&op.data_matrix(&b).unwrap(), 1).unwrap();
        let sp = Subproblem::new(&op, &b, &pair).unwrap();
        let mu = 2.0;
        let mut state = ApglState::new(&sp, mu, sp.data.clone()).unwrap();
        let mut prev = state.value;
        for _ in 0..200 {
            state.step(&sp, mu, 1.0 / mu, true).unwrap();
            assert!(state.value <= prev + 1e-8);
            prev = state.value;
        }
    }

    #[test]
    fn rejects_nonpositive_mu() {
        let op = LinearMap::<f64>::random_mask(3, 3, 0.5, 1).unwrap();
        let b = DVector::zeros(op.len());
        let pair = TruncationPair::empty(3, 3);
        assert!(tnnr_apgl(&op, &b, &pair, 0.0, &SolverConfig::default()).is_err());
        assert!(tnnr_apgl(&op, &b, &pair, -2.0, &SolverConfig::default()).is_err());
    }
}
