use nalgebra::{DMatrix, DVector};

use super::{admm, admmap, apgl, InnerSolver, SolverConfig, StageTrace, Subproblem};
use crate::error::{Error, Result};
use crate::linalg::{svd, truncation_pair, TruncationPair};
use crate::operators::LinearMap;
use crate::scalar::Real;
use crate::sve::{estimate_rank, SveConfig, SveProfile};

/// How the outer loop picks the truncation rank.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RankPolicy {
    /// Re-estimate from the spectrum of each stage's result until stable.
    Estimate(SveConfig),
    /// One stage at a fixed rank; `Fixed(0)` is plain nuclear-norm recovery.
    Fixed(usize),
}

#[derive(Clone, Debug)]
pub struct LrisdOutput<T: Real> {
    pub x: DMatrix<T>,
    /// One entry per solved stage, stage 0 first.
    pub stages: Vec<StageTrace>,
    /// Spectrum diagnostics of each estimation round.
    pub profiles: Vec<SveProfile<T>>,
    /// Rank sequence, starting with the 0 of stage 0.
    pub estimates: Vec<usize>,
    /// Rank of the final stage.
    pub rank: usize,
    /// Number of estimation rounds.
    pub outer_rounds: usize,
    /// Whether the estimates stabilised before the round cap.
    pub converged: bool,
}

fn inner_solve<T: Real>(
    op: &LinearMap<T>,
    b: &DVector<T>,
    pair: &TruncationPair<T>,
    inner: InnerSolver,
    cfg: &SolverConfig,
    start: &DMatrix<T>,
    stage: usize,
) -> Result<(DMatrix<T>, StageTrace)> {
    match inner {
        InnerSolver::Admm => admm::run(op, b, pair, T::lit(cfg.delta), cfg, Some(start), stage),
        InnerSolver::Admmap => admmap::run(op, b, pair, T::lit(cfg.delta), cfg, Some(start), stage),
        InnerSolver::Apgl => apgl::run(op, b, pair, T::lit(cfg.mu), cfg, Some(start), stage),
    }
}

/// Fixed-rank TNNR: alternate `(L, R)` from the current iterate with an inner
/// solve until the relative squared change drops below `cfg.outer_tol` or
/// `cfg.max_refreshes` refreshes have run. Starts from `A*(b)`; rank 0 needs a
/// single solve. With `delta = 0` the constrained solvers return the result
/// projected onto `{X : A(X) = b}`.
pub fn solve_stage<T: Real>(
    op: &LinearMap<T>,
    b: &DVector<T>,
    inner: InnerSolver,
    rank: usize,
    cfg: &SolverConfig,
    stage: usize,
) -> Result<(DMatrix<T>, StageTrace)> {
    cfg.validate()?;
    let (m, n) = op.shape();
    if rank >= m.min(n) {
        return Err(Error::arg(format!(
            "rank {rank} must be below min(m, n) = {}",
            m.min(n)
        )));
    }
    let empty = TruncationPair::empty(m, n);
    let sp = Subproblem::new(op, b, &empty)?;
    let mut x = sp.data.clone();
    let mut trace = StageTrace::new(stage, rank);
    trace.outer_converged = false;

    for l in 1..=cfg.max_refreshes {
        let pair = if rank == 0 {
            TruncationPair::empty(m, n)
        } else {
            truncation_pair(&x, rank)?
        };
        let (next, inner_trace) = match inner_solve(op, b, &pair, inner, cfg, &x, stage) {
            Ok(v) => v,
            Err(Error::Diverged {
                iteration,
                reason,
                trace: partial,
                ..
            }) => {
                trace.absorb(l, *partial);
                return Err(Error::Diverged {
                    stage,
                    iteration,
                    reason: format!("refresh {l}: {reason}"),
                    trace: Box::new(trace),
                });
            }
            Err(e) => return Err(e),
        };
        trace.absorb(l, inner_trace);
        let change = sp.relative_change(&next, &x);
        trace.outer_changes.push(change.as_f64());
        x = next;
        if rank == 0 || change <= T::lit(cfg.outer_tol) {
            trace.outer_converged = true;
            break;
        }
    }
    if inner != InnerSolver::Apgl && cfg.delta == 0.0 {
        x = op.project_ball(&x, b, T::zero())?;
    }
    Ok((x, trace))
}

/// Multi-stage recovery: solve at rank 0, then repeatedly estimate the rank
/// from the current result and re-solve at that rank until the estimate
/// repeats `stability` times in a row (counting stage 0 as rank 0).
pub fn lrisd<T: Real>(
    op: &LinearMap<T>,
    b: &DVector<T>,
    inner: InnerSolver,
    policy: RankPolicy,
    cfg: &SolverConfig,
) -> Result<LrisdOutput<T>> {
    cfg.validate()?;
    let (m, n) = op.shape();
    let sve = match policy {
        RankPolicy::Fixed(r) => {
            let (x, trace) = solve_stage(op, b, inner, r, cfg, 0)?;
            return Ok(LrisdOutput {
                x,
                stages: vec![trace],
                profiles: Vec::new(),
                estimates: vec![r],
                rank: r,
                outer_rounds: 0,
                converged: true,
            });
        }
        RankPolicy::Estimate(sve) => sve,
    };
    sve.validate()?;
    if m.min(n) < 3 {
        return Err(Error::arg("rank estimation needs min(m, n) >= 3"));
    }
    let kappa = T::lit(sve.kappa.resolve(m, n)?);

    let (mut x, trace) = solve_stage(op, b, inner, 0, cfg, 0)?;
    let mut out = LrisdOutput {
        x: DMatrix::zeros(0, 0),
        stages: vec![trace],
        profiles: Vec::new(),
        estimates: vec![0],
        rank: 0,
        outer_rounds: 0,
        converged: false,
    };
    while out.outer_rounds < sve.max_outer {
        out.outer_rounds += 1;
        let profile = estimate_rank(svd(&x)?.s.as_slice(), kappa)?;
        let r = profile.rank.min(m.min(n) - 1);
        out.profiles.push(profile);
        out.estimates.push(r);
        let k = sve.stability;
        if out.estimates.len() >= k
            && out.estimates[out.estimates.len() - k..]
                .iter()
                .all(|&e| e == r)
        {
            out.converged = true;
            break;
        }
        let (next, trace) = solve_stage(op, b, inner, r, cfg, out.outer_rounds)?;
        x = next;
        out.rank = r;
        out.stages.push(trace);
    }
    out.x = x;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sve::KappaRule;

    fn low_rank(m: usize, n: usize) -> DMatrix<f64> {
        let u = DMatrix::from_fn(m, 2, |i, j| {
            ((i * (j + 2)) % 5) as f64 - 2.0 + 0.3 * j as f64
        });
        let v = DMatrix::from_fn(2, n, |i, j| ((j * (i + 3)) % 7) as f64 - 3.0);
        u * v
    }

    #[test]
    fn fixed_zero_is_single_solve() {
        let op = LinearMap::<f64>::random_mask(12, 12, 0.6, 1).unwrap();
        let b = op.apply(&low_rank(12, 12)).unwrap();
        let out = lrisd(
            &op,
            &b,
            InnerSolver::Admm,
            RankPolicy::Fixed(0),
            &SolverConfig::default(),
        )
        .unwrap();
        assert_eq!(out.stages.len(), 1);
        assert_eq!(out.stages[0].inner_iterations.len(), 1);
        let (x, _) =
            solve_stage(&op, &b, InnerSolver::Admm, 0, &SolverConfig::default(), 0).unwrap();
        assert_eq!(out.x, x);
    }

    #[test]
    fn exact_constraint_is_enforced() {
        let op = LinearMap::<f64>::random_mask(12, 12, 0.6, 1).unwrap();
        let b = op.apply(&low_rank(12, 12)).unwrap();
        for inner in [InnerSolver::Admm, InnerSolver::Admmap] {
            let (x, _) = solve_stage(&op, &b, inner, 1, &SolverConfig::default(), 0).unwrap();
            assert!((op.apply(&x).unwrap() - &b).amax() < 1e-12);
        }
        let full =
            LinearMap::<f64>::SamplingMask(crate::operators::SamplingMask::full(5, 4).unwrap());
        let truth = low_rank(5, 4);
        let b = full.apply(&truth).unwrap();
        let (x, _) =
            solve_stage(&full, &b, InnerSolver::Admm, 0, &SolverConfig::default(), 0).unwrap();
        assert_eq!(x, truth);
    }

    #[test]
    fn rank_too_large_rejected() {
        let op = LinearMap::<f64>::random_mask(4, 5, 0.6, 1).unwrap();
        let b = DVector::zeros(op.len());
        assert!(solve_stage(&op, &b, InnerSolver::Admm, 4, &SolverConfig::default(), 0).is_err());
    }

    #[test]
    fn estimates_start_at_zero_and_stabilise() {
        let op = LinearMap::<f64>::random_mask(20, 20, 0.7, 3).unwrap();
        let b = op.apply(&low_rank(20, 20)).unwrap();
        let sve = SveConfig::new(KappaRule::Explicit(2.0));
        let out = lrisd(
            &op,
            &b,
            InnerSolver::Admm,
            RankPolicy::Estimate(sve),
            &SolverConfig::default(),
        )
        .unwrap();
        assert_eq!(out.estimates[0], 0);
        assert_eq!(out.profiles.len(), out.outer_rounds);
        assert_eq!(out.estimates.len(), out.outer_rounds + 1);
        if out.converged {
            let n = out.estimates.len();
            assert_eq!(out.estimates[n - 1], out.estimates[n - 2]);
            assert_eq!(out.rank, out.estimates[n - 1]);
        }
    }
}
